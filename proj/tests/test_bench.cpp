#include <doctest.h>

#include <map>

#include "covkit/bench.hpp"

using namespace covkit;

TEST_CASE("bench timing grid is deterministic and mse shrinks with n") {
    TimingConfig config;
    config.ps = {4};
    config.ns = {10000, 100000};
    config.choices = {MethodChoice{Method::BM, std::nullopt, true},
                      MethodChoice{Method::WBM, LagWindow::flat_top(), true},
                      MethodChoice{Method::SV, LagWindow::bartlett(), true}};
    config.reps = 50;
    config.seed = 321;

    const auto cells = bench_time(config);
    CHECK(cells.size() == 6);

    std::map<std::string, std::map<Index, double>> mse_by_method;
    for (const auto& cell : cells) {
        CHECK(cell.reps == 50);
        CHECK(cell.mean_ms >= 0.0);
        mse_by_method[cell.choice.label()][cell.n] = cell.mean_mse;
    }
    for (const auto& [label, by_n] : mse_by_method) {
        INFO(label);
        CHECK(by_n.at(100000) < by_n.at(10000));
    }

    // same seed, same grid: identical numbers apart from wall time
    const auto rerun = bench_time(config);
    for (size_t i = 0; i < cells.size(); ++i)
        CHECK(cells[i].mean_mse == rerun[i].mean_mse);
}

TEST_CASE("variance-ratio replications are thread-count independent") {
    VarianceRatioConfig config;
    config.model = Ar1Model{0.5, 0};
    config.n = 5000;
    config.choices = {MethodChoice{Method::BM, std::nullopt, true},
                      MethodChoice{Method::SV, LagWindow::bartlett(), true}};
    config.reps = 40;
    config.seed = 99;
    config.threads = 1;
    const auto serial = bench_variance_ratio(config);
    config.threads = 4;
    const auto parallel = bench_variance_ratio(config);
    CHECK(serial[0].variance == parallel[0].variance);
    CHECK(serial[1].mean == parallel[1].mean);
    CHECK(serial[0].variance > 0.0);
}
