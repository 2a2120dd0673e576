#include "covkit/windows.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <charconv>

namespace covkit {

namespace {

const char* kValidNames =
    "bartlett, tukey-hanning, flat-top, truncation, parzen:<q>, scaled-bartlett:<eta>";

double parse_double(std::string_view s, const std::string& what) {
    double value = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc{} || ptr != end)
        throw ConfigError("invalid " + what + ": '" + std::string(s) + "'");
    return value;
}

int parse_int(std::string_view s, const std::string& what) {
    int value = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc{} || ptr != end)
        throw ConfigError("invalid " + what + ": '" + std::string(s) + "'");
    return value;
}

}  // namespace

LagWindow LagWindow::parse(std::string_view name) {
    const auto colon = name.find(':');
    const std::string_view head = name.substr(0, colon);
    const std::string_view arg =
        colon == std::string_view::npos ? std::string_view{} : name.substr(colon + 1);

    LagWindow w;
    const bool has_arg = colon != std::string_view::npos;
    if (head == "bartlett" || head == "tukey-hanning" || head == "flat-top" ||
        head == "truncation") {
        if (has_arg)
            throw ConfigError("window '" + std::string(head) + "' takes no parameter");
        if (head == "bartlett") w = bartlett();
        else if (head == "tukey-hanning") w = tukey_hanning();
        else if (head == "flat-top") w = flat_top();
        else w = truncation();
    } else if (head == "parzen") {
        if (arg.empty()) throw ConfigError("parzen window requires an exponent, e.g. parzen:2");
        w = parzen(parse_int(arg, "parzen exponent"));
    } else if (head == "scaled-bartlett") {
        if (arg.empty())
            throw ConfigError("scaled-bartlett window requires a slope, e.g. scaled-bartlett:2");
        w = scaled_bartlett(parse_double(arg, "scaled-bartlett slope"));
    } else {
        throw ConfigError("unknown window '" + std::string(name) +
                          "'; valid names: " + std::string(kValidNames));
    }
    w.validate();
    return w;
}

std::string LagWindow::name() const {
    switch (kind) {
        case WindowKind::Bartlett: return "bartlett";
        case WindowKind::TukeyHanning: return "tukey-hanning";
        case WindowKind::BartlettFlatTop: return "flat-top";
        case WindowKind::SimpleTruncation: return "truncation";
        case WindowKind::Parzen: return "parzen:" + std::to_string(q);
        case WindowKind::ScaledBartlett: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "scaled-bartlett:%g", eta);
            return buf;
        }
    }
    return "?";
}

void LagWindow::validate() const {
    if (kind == WindowKind::Parzen && q < 1)
        throw ConfigError("parzen window requires a positive integer exponent q");
    if (kind == WindowKind::ScaledBartlett && (eta <= 0.0 || eta == 1.0))
        throw ConfigError("scaled-bartlett window requires a positive slope eta != 1");
}

Index LagWindow::adjust_truncation(Index b) const {
    if (kind != WindowKind::BartlettFlatTop) return b;
    return std::max<Index>(2, b - (b % 2));
}

bool operator==(const LagWindow& a, const LagWindow& b) {
    return a.kind == b.kind && a.q == b.q && a.eta == b.eta;
}

double window_weight(const LagWindow& w, Index k, Index b) {
    if (b < 1) throw ConfigError("window truncation point b must be >= 1");
    w.validate();
    const Index a = k < 0 ? -k : k;
    if (a >= b) return 0.0;  // outside support
    const double x = static_cast<double>(a) / static_cast<double>(b);
    switch (w.kind) {
        case WindowKind::Bartlett:
            return 1.0 - x;
        case WindowKind::TukeyHanning:
            return 0.5 * (1.0 + std::cos(M_PI * x));
        case WindowKind::BartlettFlatTop:
            return 2 * a <= b ? 1.0 : 2.0 * (1.0 - x);
        case WindowKind::SimpleTruncation:
            return 1.0;
        case WindowKind::Parzen: {
            double xq = 1.0;
            for (int i = 0; i < w.q; ++i) xq *= x;
            return 1.0 - xq;
        }
        case WindowKind::ScaledBartlett:
            return 1.0 - w.eta * x;
    }
    return 0.0;
}

double delta1(const LagWindow& w, Index k, Index b) {
    return window_weight(w, k - 1, b) - window_weight(w, k, b);
}

double delta2(const LagWindow& w, Index k, Index b) {
    return window_weight(w, k - 1, b) - 2.0 * window_weight(w, k, b) +
           window_weight(w, k + 1, b);
}

namespace {

// sum of k*delta2 and |delta2| over k = 1..b
std::pair<double, double> condition_sums(const LagWindow& w, Index b) {
    double sum_k = 0.0;
    double sum_abs = 0.0;
    for (Index k = 1; k <= b; ++k) {
        const double d2 = delta2(w, k, b);
        sum_k += static_cast<double>(k) * d2;
        sum_abs += std::abs(d2);
    }
    return {sum_k, sum_abs};
}

}  // namespace

ConditionReport check_conditions(const LagWindow& w, Index b, double tol) {
    if (b < 2) throw ConfigError("check_conditions requires b >= 2");
    if (tol <= 0.0) throw ConfigError("check_conditions requires tol > 0");
    w.validate();

    ConditionReport report;
    report.tol = tol;
    report.b_used = w.adjust_truncation(b);

    auto [sum_k, sum_abs] = condition_sums(w, report.b_used);
    report.sum_k_delta2 = sum_k;
    report.abs_sum_delta2 = sum_abs;
    report.cond1_holds = std::abs(sum_k - 1.0) <= tol;

    // Geometric grid so a caller can see whether sum |delta2| decays.
    report.cond1_on_grid = true;
    const Index top = std::max<Index>(report.b_used, 512);
    for (Index g = 4; g <= top; g *= 2) {
        const Index gb = w.adjust_truncation(g);
        if (!report.abs_sum_trend.empty() && report.abs_sum_trend.back().first == gb) continue;
        auto [gsum_k, gsum_abs] = condition_sums(w, gb);
        report.cond1_on_grid = report.cond1_on_grid && std::abs(gsum_k - 1.0) <= tol;
        report.abs_sum_trend.emplace_back(gb, gsum_abs);
    }
    const double first = report.abs_sum_trend.front().second;
    const double last = report.abs_sum_trend.back().second;
    report.abs_sum_decays = last <= 0.25 * first;
    report.consistency_ok =
        report.cond1_holds && report.cond1_on_grid && report.abs_sum_decays;
    return report;
}

}  // namespace covkit
