#pragma once

#include <string>
#include <vector>

#include "errors.hpp"

namespace cnsdeblur {

struct OptimizerConfig {
    double delta_t = 0.1;
    double lambda0 = 0.01;
    double lambda_floor = 1e-5;
    int q = 3;
    double theta = 10.0;
    double eps = 1e-8;
    int max_iters = 20;
    double alpha = 1.0;
    // Intensity units in which surface geometry is measured; images are stored in [0,1].
    double intensity_scale = 255.0;

    void validate() const {
        if (!(delta_t > 0.0)) throw ContractError("delta_t must be > 0");
        if (!(eps > 0.0)) throw ContractError("eps must be > 0");
        if (max_iters < 1) throw ContractError("max_iters must be >= 1");
        if (!(theta >= 1.0)) throw ContractError("theta must be >= 1");
        if (!(lambda0 >= 0.0)) throw ContractError("lambda must be >= 0");
        if (!(lambda_floor > 0.0)) throw ContractError("lambda floor must be > 0");
        if (q < 0) throw ContractError("q must be >= 0");
        if (!(alpha > 0.0)) throw ContractError("alpha must be > 0");
        if (!(intensity_scale > 0.0)) throw ContractError("intensity_scale must be > 0");
    }
};

enum class StopReason { eps_reached, residual_increased, iter_cap, lambda_gate_failed };

inline const char* to_string(StopReason r) {
    switch (r) {
    case StopReason::eps_reached: return "eps_reached";
    case StopReason::residual_increased: return "residual_increased";
    case StopReason::iter_cap: return "iter_cap";
    case StopReason::lambda_gate_failed: return "lambda_gate_failed";
    }
    return "unknown";
}

struct RunReport {
    std::string method;
    int iterations = 0;
    std::vector<double> residual_trace;
    std::vector<double> lambda_trace;
    StopReason stop_reason = StopReason::iter_cap;
    double convergence_ratio_max = 0.0;
    double lambda_used = 0.0;
    int transition = -1;               // index of the lambda peak, -1 if never observed
    std::vector<double> dt_min_trace;  // CS only
    std::vector<double> bound_lhs_trace; // CS blur level <(X - H*S)^2>, from the second iteration on
    std::vector<double> bound_rhs_trace; // CS matching upper bound
    int returned_iterate = -1;         // number of steps applied to the returned state
    std::vector<std::string> notes;
};

} // namespace cnsdeblur
