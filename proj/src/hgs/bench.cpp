/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "hgs/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hgs/error.hpp"

namespace hgs {

bool BenchReport::reset_ok() const
{
    return std::all_of(trials.begin(), trials.end(), [](const auto& t) { return t.reset_ok; });
}

double quantile(std::vector<double> values, double q)
{
    if (values.empty()) {
        throw Error(ErrorKind::InvalidArgument, "quantile of an empty set");
    }
    std::sort(values.begin(), values.end());
    double pos = q * static_cast<double>(values.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

BenchReport run_bench(Driver& driver, const std::vector<SuiteEntry>& suite, int repetitions,
                      const BenchProgress& progress)
{
    if (suite.empty()) {
        throw Error(ErrorKind::Config, "benchmark suite is empty");
    }
    if (repetitions < 1) {
        throw Error(ErrorKind::Config, "repetitions must be >= 1");
    }
    BenchReport report;
    report.expected_trials = suite.size() * static_cast<std::size_t>(repetitions);
    try {
        driver.reset();
        const auto initial = driver.hashes();
        driver.take_samples();
        // Interleave requests so slow drift in the machine does not line
        // up with request size.
        for (int rep = 0; rep < repetitions; ++rep) {
            for (const auto& entry : suite) {
                driver.reset();
                BenchTrial trial {entry.name, rep};
                trial.reset_ok = driver.hashes() == initial;
                driver.take_samples();
                auto start = std::chrono::steady_clock::now();
                auto result = driver.grow(entry.spec, kGrowJob);
                trial.total_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                trial.outcome = result.outcome;
                trial.levels = result.levels_traversed;
                for (const auto& s : driver.take_samples()) {
                    report.samples.push_back({entry.name, rep, s});
                }
                if (!trial.reset_ok) {
                    spdlog::warn("{} rep {}: pre-trial state differs from the first trial", entry.name, rep);
                }
                report.trials.push_back(trial);
                if (progress) {
                    progress(trial);
                }
            }
        }
        driver.reset();
        report.complete = true;
    } catch (const std::exception& e) {
        report.error = e.what();
        spdlog::error("benchmark stopped after {} of {} trials: {}", report.trials.size(), report.expected_trials,
                      e.what());
    }
    report.stats = summarize(report.samples);
    return report;
}

std::vector<PhaseStats> summarize(const std::vector<BenchSample>& samples)
{
    std::vector<std::string> order;
    std::map<std::tuple<std::string, int, Phase>, std::vector<double>> groups;
    for (const auto& s : samples) {
        if (std::find(order.begin(), order.end(), s.request) == order.end()) {
            order.push_back(s.request);
        }
        groups[{s.request, s.sample.level, s.sample.phase}].push_back(s.sample.duration_s);
    }
    std::vector<PhaseStats> out;
    for (const auto& request : order) {
        for (const auto& [key, values] : groups) {
            if (std::get<0>(key) != request) {
                continue;
            }
            out.push_back({request, std::get<1>(key), std::get<2>(key), values.size(), quantile(values, 0.5),
                           quantile(values, 0.25), quantile(values, 0.75)});
        }
    }
    return out;
}

nlohmann::json to_json(const BenchReport& report)
{
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : report.trials) {
        trials.push_back({{"request", t.request},
                          {"rep", t.rep},
                          {"outcome", to_string(t.outcome)},
                          {"levels", t.levels},
                          {"total_s", t.total_s},
                          {"reset_ok", t.reset_ok}});
    }
    nlohmann::json stats = nlohmann::json::array();
    for (const auto& s : report.stats) {
        stats.push_back({{"request", s.request},
                         {"level", s.level},
                         {"phase", to_string(s.phase)},
                         {"count", s.count},
                         {"median_s", s.median},
                         {"q1_s", s.q1},
                         {"q3_s", s.q3},
                         {"iqr_s", s.q3 - s.q1}});
    }
    nlohmann::json j = {{"complete", report.complete},
                        {"trials_run", report.trials.size()},
                        {"trials_expected", report.expected_trials},
                        {"reset_ok", report.reset_ok()},
                        {"trials", std::move(trials)},
                        {"stats", std::move(stats)}};
    if (!report.error.empty()) {
        j["error"] = report.error;
    }
    return j;
}

std::string format_summary(const BenchReport& report)
{
    std::string out = fmt::format("{:<8} {:>5} {:<10} {:>6} {:>12} {:>12}\n", "request", "level", "phase", "count",
                                  "median_s", "iqr_s");
    for (const auto& s : report.stats) {
        out += fmt::format("{:<8} {:>5} {:<10} {:>6} {:>12.6g} {:>12.6g}\n", s.request, s.level, to_string(s.phase),
                           s.count, s.median, s.q3 - s.q1);
    }
    out += fmt::format("trials {}/{}{}\n", report.trials.size(), report.expected_trials,
                       report.complete ? "" : " INCOMPLETE: " + report.error);
    return out;
}

void append_samples(const std::filesystem::path& path, const std::vector<BenchSample>& samples)
{
    std::ofstream out(path, std::ios::app);
    if (!out) {
        throw Error(ErrorKind::Config, "cannot write " + path.string());
    }
    for (const auto& s : samples) {
        auto j = to_json(s.sample);
        j["request"] = s.request;
        j["rep"] = s.rep;
        out << j.dump() << '\n';
    }
}

void write_bench(const BenchReport& report, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    std::filesystem::remove(dir / "samples.jsonl");
    append_samples(dir / "samples.jsonl", report.samples);
    std::ofstream(dir / "summary.json") << to_json(report).dump(2) << '\n';
    std::ofstream(dir / "summary.txt") << format_summary(report);
}

} // namespace hgs
