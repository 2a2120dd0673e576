#include "covkit/estimators.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace covkit {

std::string method_name(Method m) {
    switch (m) {
        case Method::BM: return "bm";
        case Method::OBM: return "obm";
        case Method::SV: return "sv";
        case Method::WBM: return "wbm";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    if (name == "bm") return Method::BM;
    if (name == "obm") return Method::OBM;
    if (name == "sv") return Method::SV;
    if (name == "wbm") return Method::WBM;
    throw ConfigError("unknown method '" + std::string(name) + "'; valid names: bm, obm, sv, wbm");
}

BatchSchedule BatchSchedule::power(double nu) {
    if (!(nu > 0.0 && nu < 1.0)) throw ConfigError("power rule requires 0 < nu < 1");
    return {Policy::PowerRule, nu, 0};
}

BatchSchedule BatchSchedule::doubling(double nu) {
    if (!(nu > 0.0 && nu < 1.0)) throw ConfigError("doubling rule requires 0 < nu < 1");
    return {Policy::Doubling, nu, 0};
}

BatchSchedule BatchSchedule::fixed(Index b) {
    if (b < 2) throw ConfigError("fixed batch size must be >= 2");
    return {Policy::Fixed, 0.0, b};
}

BatchSchedule BatchSchedule::parse(std::string_view s) {
    const auto colon = s.find(':');
    if (colon == std::string_view::npos)
        throw ConfigError("invalid schedule '" + std::string(s) +
                          "'; expected pow:<nu>, doubling:<nu> or fixed:<b>");
    const std::string_view head = s.substr(0, colon);
    const std::string arg(s.substr(colon + 1));
    try {
        if (head == "pow") return power(std::stod(arg));
        if (head == "doubling") return doubling(std::stod(arg));
        if (head == "fixed") return fixed(std::stol(arg));
    } catch (const std::logic_error&) {
        throw ConfigError("invalid schedule argument '" + arg + "' in '" + std::string(s) + "'");
    }
    throw ConfigError("invalid schedule '" + std::string(s) +
                      "'; expected pow:<nu>, doubling:<nu> or fixed:<b>");
}

std::string BatchSchedule::name() const {
    char buf[48];
    switch (policy) {
        case Policy::PowerRule:
            std::snprintf(buf, sizeof(buf), "pow:%g", nu);
            return buf;
        case Policy::Doubling:
            std::snprintf(buf, sizeof(buf), "doubling:%g", nu);
            return buf;
        case Policy::Fixed:
            return "fixed:" + std::to_string(fixed_b);
    }
    return "?";
}

Index doubling_batch_size(Index n, double nu) {
    if (n < 1) throw ConfigError("doubling_batch_size requires n >= 1");
    // smallest k with 2^k >= n^nu, computed in log space; the epsilon keeps
    // exact powers (e.g. 4096^(1/3) = 16) from being bumped a level up
    const double k = std::ceil(nu * std::log2(static_cast<double>(n)) - 1e-9);
    const auto ik = static_cast<Index>(std::max(0.0, k));
    return Index(1) << std::min<Index>(ik, 62);
}

Index batch_size(Index n, const BatchSchedule& schedule) {
    if (n < 4) throw ConfigError("batch_size requires n >= 4");
    Index b = 2;
    switch (schedule.policy) {
        case BatchSchedule::Policy::PowerRule:
            // epsilon guards floor() against pow() landing just under an
            // exact integer root
            b = static_cast<Index>(std::floor(
                std::pow(static_cast<double>(n), schedule.nu) + 1e-9));
            break;
        case BatchSchedule::Policy::Doubling:
            b = doubling_batch_size(n, schedule.nu);
            break;
        case BatchSchedule::Policy::Fixed:
            b = schedule.fixed_b;
            break;
    }
    return std::clamp<Index>(b, 2, n / 2);
}

CovEstimate run_estimator(const Eigen::Ref<const Eigen::MatrixXd>& chain,
                          const EstimatorSpec& spec) {
    const Index b = batch_size(chain.rows(), spec.schedule);
    switch (spec.method) {
        case Method::BM:
            return bm(chain, b);
        case Method::OBM:
            return obm(chain, b);
        case Method::SV:
            if (!spec.window) throw ConfigError("sv requires a window");
            return sv(chain, *spec.window, b);
        case Method::WBM:
            if (!spec.window) throw ConfigError("wbm requires a window");
            if (spec.fast && spec.window->kind == WindowKind::BartlettFlatTop && b >= 4)
                return wbm_flat_top_fast(chain, b);
            return wbm(chain, *spec.window, b);
    }
    throw ConfigError("unknown method");
}

}  // namespace covkit
