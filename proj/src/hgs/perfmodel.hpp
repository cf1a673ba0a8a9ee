/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef HGS_PERFMODEL_HPP
#define HGS_PERFMODEL_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hgs {

enum class Phase { Match, Comms, AddUpdate };
enum class Transport { Intra, Inter };

const char* to_string(Phase phase) noexcept;
const char* to_string(Transport transport) noexcept;
std::optional<Phase> parse_phase(std::string_view name) noexcept;
std::optional<Transport> parse_transport(std::string_view name) noexcept;

struct TimingSample {
    int level = 0;
    Phase phase = Phase::Match;
    std::int64_t n = 0;
    double duration_s = 0.0;
    Transport transport = Transport::Intra;

    bool operator==(const TimingSample&) const = default;
};

struct LinearModel {
    double beta = 0.0;
    double beta0 = 0.0;
    double r2 = 0.0;
    double mape = 0.0;
};

struct BoundParams {
    double b = 2.0;
    double s0 = 1.0;
    double t0 = 0.0;
    double beta = 0.0;
    double beta0 = 0.0;
};

// Coefficients for the aggregate grow-time predictor.
struct ModelSet {
    LinearModel inter;
    LinearModel intra;
    LinearModel attach;
};

// Coefficients published for the reference system (comm across hosts,
// comm within a host, attach).
ModelSet reference_coefficients();

struct FitOptions {
    int folds = 5;
    std::uint64_t seed = 0;
};

/*
 * Ordinary least squares of y on x. A negative intercept is replaced by zero
 * and the slope refit through the origin; a negative slope is replaced by
 * zero with the intercept set to mean(y). CV metrics are averaged over folds
 * cut as contiguous blocks of a seeded shuffle; coefficients use all data.
 */
LinearModel fit_linear(std::span<const double> x, std::span<const double> y, const FitOptions& options = {});
LinearModel fit_linear(std::span<const TimingSample> samples, const FitOptions& options = {});

// Mean of |pred - obs| / |obs|.
double mape(std::span<const double> predictions, std::span<const double> observations);
double r_squared(std::span<const double> predictions, std::span<const double> observations);

// t0 b (1 - 1/s0) / (b - 1) + beta0 log_b(s0)
double geometric_bound(const BoundParams& p);

// 2 t0 + m (b_inter n + b0_inter) + p (b_intra n + b0_intra) + q n b_attach
double predict_t_mg(double n, double m_levels, double p_pairs, double q_levels, double t0, const ModelSet& models);

nlohmann::json to_json(const TimingSample& sample);
TimingSample sample_from_json(const nlohmann::json& j);
std::vector<TimingSample> read_samples(std::istream& in);
void write_samples(std::ostream& out, std::span<const TimingSample> samples);

struct FitRow {
    Phase phase = Phase::Match;
    Transport transport = Transport::Intra;
    std::size_t samples = 0;
    std::optional<LinearModel> model;
    std::string error;
};

// One fit per (phase, transport) group present in `samples`.
std::vector<FitRow> fit_report(std::span<const TimingSample> samples, const FitOptions& options = {});
nlohmann::json to_json(const std::vector<FitRow>& rows);
std::string format_table(const std::vector<FitRow>& rows);

} // namespace hgs

#endif
