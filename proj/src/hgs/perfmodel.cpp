/*
 * Copyright (C) 2026 The hgs Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "hgs/perfmodel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include <fmt/format.h>

#include "hgs/error.hpp"

namespace hgs {

const char* to_string(Phase phase) noexcept
{
    switch (phase) {
    case Phase::Match:
        return "match";
    case Phase::Comms:
        return "comms";
    case Phase::AddUpdate:
        return "add_update";
    }
    return "?";
}

const char* to_string(Transport transport) noexcept
{
    return transport == Transport::Intra ? "intra" : "inter";
}

std::optional<Phase> parse_phase(std::string_view name) noexcept
{
    for (auto p : {Phase::Match, Phase::Comms, Phase::AddUpdate}) {
        if (name == to_string(p)) {
            return p;
        }
    }
    return std::nullopt;
}

std::optional<Transport> parse_transport(std::string_view name) noexcept
{
    for (auto t : {Transport::Intra, Transport::Inter}) {
        if (name == to_string(t)) {
            return t;
        }
    }
    return std::nullopt;
}

ModelSet reference_coefficients()
{
    ModelSet m;
    m.inter = {1.5829e-5, 0.0020992, 0.99774, 0.0090208};
    m.intra = {9.0824e-6, 0.00063196, 0.99990, 0.0027139};
    m.attach = {3.4583e-5, 0.0, 0.99991, 0.0088698};
    return m;
}

namespace {

struct Coefficients {
    double beta;
    double beta0;
};

Coefficients ols(std::span<const double> x, std::span<const double> y, std::span<const std::size_t> rows)
{
    double n = static_cast<double>(rows.size());
    double sx = 0, sy = 0;
    for (auto i : rows) {
        sx += x[i];
        sy += y[i];
    }
    double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (auto i : rows) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) {
        throw Error(ErrorKind::InvalidArgument, "degenerate design: all x values are equal");
    }
    Coefficients c {sxy / sxx, my - (sxy / sxx) * mx};
    if (c.beta0 < 0.0) {
        double xx = 0, xy = 0;
        for (auto i : rows) {
            xx += x[i] * x[i];
            xy += x[i] * y[i];
        }
        c = {xy / xx, 0.0};
    }
    if (c.beta < 0.0) {
        c = {0.0, std::max(my, 0.0)};
    }
    return c;
}

} // namespace

double mape(std::span<const double> predictions, std::span<const double> observations)
{
    if (predictions.size() != observations.size() || observations.empty()) {
        throw Error(ErrorKind::InvalidArgument, "mape needs equal, nonzero lengths");
    }
    double sum = 0;
    for (std::size_t i = 0; i < observations.size(); ++i) {
        if (observations[i] == 0.0) {
            throw Error(ErrorKind::InvalidArgument, "mape is undefined for a zero observation");
        }
        sum += std::abs(predictions[i] - observations[i]) / std::abs(observations[i]);
    }
    return sum / static_cast<double>(observations.size());
}

double r_squared(std::span<const double> predictions, std::span<const double> observations)
{
    if (predictions.size() != observations.size() || observations.empty()) {
        throw Error(ErrorKind::InvalidArgument, "r_squared needs equal, nonzero lengths");
    }
    double mean = std::accumulate(observations.begin(), observations.end(), 0.0) / observations.size();
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < observations.size(); ++i) {
        ss_res += (observations[i] - predictions[i]) * (observations[i] - predictions[i]);
        ss_tot += (observations[i] - mean) * (observations[i] - mean);
    }
    if (ss_tot == 0.0) {
        return ss_res == 0.0 ? 1.0 : 0.0;
    }
    return 1.0 - ss_res / ss_tot;
}

LinearModel fit_linear(std::span<const double> x, std::span<const double> y, const FitOptions& options)
{
    if (x.size() != y.size()) {
        throw Error(ErrorKind::InvalidArgument, "fit_linear: x and y differ in length");
    }
    if (x.size() < 10) {
        throw Error(ErrorKind::InvalidArgument,
                    "fit_linear needs at least 10 samples, got " + std::to_string(x.size()));
    }
    if (std::set<double>(x.begin(), x.end()).size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "degenerate design: all x values are equal");
    }
    if (options.folds < 2 || static_cast<std::size_t>(options.folds) > x.size()) {
        throw Error(ErrorKind::InvalidArgument, "invalid fold count " + std::to_string(options.folds));
    }

    std::vector<std::size_t> all(x.size());
    std::iota(all.begin(), all.end(), 0);
    auto full = ols(x, y, all);

    std::vector<std::size_t> order = all;
    std::mt19937_64 rng(options.seed);
    std::shuffle(order.begin(), order.end(), rng);

    double mape_sum = 0, r2_sum = 0;
    auto k = static_cast<std::size_t>(options.folds);
    for (std::size_t f = 0; f < k; ++f) {
        auto lo = f * order.size() / k;
        auto hi = (f + 1) * order.size() / k;
        std::vector<std::size_t> train;
        train.insert(train.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(lo));
        train.insert(train.end(), order.begin() + static_cast<std::ptrdiff_t>(hi), order.end());
        Coefficients c;
        try {
            c = ols(x, y, train);
        } catch (const Error&) {
            // Every training x equal: fall back to the full-data fit.
            c = full;
        }
        std::vector<double> pred, obs;
        for (auto i = lo; i < hi; ++i) {
            pred.push_back(c.beta * x[order[i]] + c.beta0);
            obs.push_back(y[order[i]]);
        }
        mape_sum += mape(pred, obs);
        r2_sum += r_squared(pred, obs);
    }
    return {full.beta, full.beta0, r2_sum / static_cast<double>(k), mape_sum / static_cast<double>(k)};
}

LinearModel fit_linear(std::span<const TimingSample> samples, const FitOptions& options)
{
    std::vector<double> x, y;
    x.reserve(samples.size());
    y.reserve(samples.size());
    for (const auto& s : samples) {
        x.push_back(static_cast<double>(s.n));
        y.push_back(s.duration_s);
    }
    return fit_linear(x, y, options);
}

double geometric_bound(const BoundParams& p)
{
    if (!(p.b > 1.0) || !(p.s0 >= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "bound requires b > 1 and s0 >= 1");
    }
    return p.t0 * p.b * (1.0 - 1.0 / p.s0) / (p.b - 1.0) + p.beta0 * std::log(p.s0) / std::log(p.b);
}

double predict_t_mg(double n, double m_levels, double p_pairs, double q_levels, double t0, const ModelSet& models)
{
    if (n < 0 || m_levels < 0 || p_pairs < 0 || q_levels < 0) {
        throw Error(ErrorKind::InvalidArgument, "predict_t_mg: counts must be nonnegative");
    }
    return 2.0 * t0 + m_levels * (models.inter.beta * n + models.inter.beta0)
        + p_pairs * (models.intra.beta * n + models.intra.beta0) + q_levels * n * models.attach.beta;
}

nlohmann::json to_json(const TimingSample& s)
{
    return {{"level", s.level},
            {"phase", to_string(s.phase)},
            {"n", s.n},
            {"duration_s", s.duration_s},
            {"transport", to_string(s.transport)}};
}

TimingSample sample_from_json(const nlohmann::json& j)
{
    try {
        TimingSample s;
        s.level = j.at("level").get<int>();
        auto phase = parse_phase(j.at("phase").get<std::string>());
        auto transport = parse_transport(j.at("transport").get<std::string>());
        if (!phase || !transport) {
            throw Error(ErrorKind::Parse, "unknown phase or transport in sample " + j.dump());
        }
        s.phase = *phase;
        s.transport = *transport;
        s.n = j.at("n").get<std::int64_t>();
        s.duration_s = j.at("duration_s").get<double>();
        if (s.n < 0 || s.duration_s < 0) {
            throw Error(ErrorKind::Parse, "negative size or duration in sample " + j.dump());
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("bad sample record: ") + e.what());
    }
}

std::vector<TimingSample> read_samples(std::istream& in)
{
    std::vector<TimingSample> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(sample_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Parse, "sample log line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_samples(std::ostream& out, std::span<const TimingSample> samples)
{
    for (const auto& s : samples) {
        out << to_json(s).dump() << '\n';
    }
}

std::vector<FitRow> fit_report(std::span<const TimingSample> samples, const FitOptions& options)
{
    std::map<std::pair<Phase, Transport>, std::vector<TimingSample>> groups;
    for (const auto& s : samples) {
        groups[{s.phase, s.transport}].push_back(s);
    }
    std::vector<FitRow> rows;
    for (const auto& [key, group] : groups) {
        FitRow row {key.first, key.second, group.size(), std::nullopt, {}};
        try {
            row.model = fit_linear(group, options);
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::json to_json(const std::vector<FitRow>& rows)
{
    auto out = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j = {{"phase", to_string(r.phase)}, {"transport", to_string(r.transport)}, {"samples", r.samples}};
        if (r.model) {
            j["mape"] = r.model->mape;
            j["r2"] = r.model->r2;
            j["beta"] = r.model->beta;
            j["beta0"] = r.model->beta0;
        } else {
            j["error"] = r.error;
        }
        out.push_back(std::move(j));
    }
    return out;
}

std::string format_table(const std::vector<FitRow>& rows)
{
    std::string out = fmt::format("{:<18} {:>8} {:>12} {:>10} {:>13} {:>13}\n", "model", "samples", "avg MAPE",
                                  "avg R2", "beta", "beta0");
    for (const auto& r : rows) {
        auto name = fmt::format("{}/{}", to_string(r.phase), to_string(r.transport));
        if (r.model) {
            out += fmt::format("{:<18} {:>8} {:>12.7f} {:>10.5f} {:>13.5e} {:>13.5e}\n", name, r.samples, r.model->mape,
                               r.model->r2, r.model->beta, r.model->beta0);
        } else {
            out += fmt::format("{:<18} {:>8} {}\n", name, r.samples, r.error);
        }
    }
    return out;
}

} // namespace hgs
