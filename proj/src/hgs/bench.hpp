/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef HGS_BENCH_HPP
#define HGS_BENCH_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgs/grow.hpp"
#include "hgs/hierarchy.hpp"
#include "hgs/perfmodel.hpp"

namespace hgs {

// What a benchmark needs from a hierarchy, wherever its levels run.
class Driver {
public:
    virtual ~Driver() = default;
    virtual std::size_t depth() const = 0;
    virtual GrowResult grow(const JobSpec& spec, JobId job) = 0;
    virtual void reset() = 0;
    // Top level first.
    virtual std::vector<std::uint64_t> hashes() = 0;
    virtual std::vector<TimingSample> take_samples() = 0;
};

class LocalDriver final : public Driver {
public:
    explicit LocalDriver(Hierarchy& hierarchy) : h_(hierarchy) { }
    std::size_t depth() const override { return h_.depth(); }
    GrowResult grow(const JobSpec& spec, JobId job) override { return h_.leaf().match_grow(spec, job); }
    void reset() override { h_.reset(); }
    std::vector<std::uint64_t> hashes() override { return h_.hashes(); }
    std::vector<TimingSample> take_samples() override { return h_.take_samples(); }

private:
    Hierarchy& h_;
};

struct BenchSample {
    std::string request;
    int rep = 0;
    TimingSample sample;
};

struct BenchTrial {
    std::string request;
    int rep = 0;
    GrowOutcome outcome = GrowOutcome::Failed;
    int levels = 0;
    double total_s = 0.0;
    bool reset_ok = true;
};

struct PhaseStats {
    std::string request;
    int level = 0;
    Phase phase = Phase::Match;
    std::size_t count = 0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

struct BenchReport {
    std::vector<BenchSample> samples;
    std::vector<BenchTrial> trials;
    std::vector<PhaseStats> stats;
    std::size_t expected_trials = 0;
    bool complete = false;
    std::string error;

    bool reset_ok() const;
};

// Linear-interpolated quantile of unsorted data, q in [0, 1].
double quantile(std::vector<double> values, double q);

using BenchProgress = std::function<void(const BenchTrial&)>;

// Run every suite entry `repetitions` times, resetting all levels before each
// trial. Stops at the first exception and reports what ran.
BenchReport run_bench(Driver& driver, const std::vector<SuiteEntry>& suite, int repetitions,
                      const BenchProgress& progress = {});

std::vector<PhaseStats> summarize(const std::vector<BenchSample>& samples);

nlohmann::json to_json(const BenchReport& report);
std::string format_summary(const BenchReport& report);
// samples.jsonl, summary.json and summary.txt under `dir`.
void write_bench(const BenchReport& report, const std::filesystem::path& dir);
void append_samples(const std::filesystem::path& path, const std::vector<BenchSample>& samples);

} // namespace hgs

#endif
