#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hairec/distribution.hpp"
#include "hairec/error.hpp"

namespace hairec {

struct Violation {
    std::string location;
    std::string message;

    std::string str() const { return location + ": " + message; }
};

/// Empty means valid.
using ValidationReport = std::vector<Violation>;

/// Finite partially observed system: kernels P(x'|x,u), P(y|x), reward r(x,u).
///
/// Tables are flat and row-major:
///   transition  [u][x][x']
///   observation [x][y]
///   reward      [x][u]
/// `initial` is the prior on X_0. Labels fix the dimensions.
struct EnvModel {
    std::vector<std::string> state_labels;
    std::vector<std::string> action_labels;
    std::vector<std::string> observation_labels;
    std::vector<double> initial;
    std::vector<double> transition;
    std::vector<double> observation;
    std::vector<double> reward;
    double r_min = 0.0;
    double r_max = 0.0;
    double discount = 0.95;
    int horizon = 1;

    std::size_t n_states() const noexcept { return state_labels.size(); }
    std::size_t n_actions() const noexcept { return action_labels.size(); }
    std::size_t n_obs() const noexcept { return observation_labels.size(); }

    double trans(std::size_t x, std::size_t u, std::size_t x_next) const {
        return transition[(u * n_states() + x) * n_states() + x_next];
    }
    std::span<const double> trans_row(std::size_t x, std::size_t u) const {
        return {transition.data() + (u * n_states() + x) * n_states(), n_states()};
    }
    double obs(std::size_t x, std::size_t y) const { return observation[x * n_obs() + y]; }
    std::span<const double> obs_row(std::size_t x) const {
        return {observation.data() + x * n_obs(), n_obs()};
    }
    double r(std::size_t x, std::size_t u) const { return reward[x * n_actions() + u]; }

    /// max(|r_min|, |r_max|): the reward magnitude bound used by the gap bounds.
    double reward_bound() const noexcept { return std::max(std::abs(r_min), std::abs(r_max)); }

    bool operator==(const EnvModel&) const = default;
};

namespace detail {

inline void check_rows(ValidationReport& out, const std::string& name, std::span<const double> table,
                       std::size_t row_len, const std::vector<std::string>& row_names) {
    for (std::size_t row = 0; row * row_len < table.size(); ++row) {
        auto r = table.subspan(row * row_len, row_len);
        double sum = 0.0;
        bool bad_entry = false;
        for (double v : r) {
            if (!std::isfinite(v) || v < 0.0) bad_entry = true;
            sum += v;
        }
        const std::string where = name + row_names.at(row);
        if (bad_entry)
            out.push_back({where, "row has a negative or non-finite entry"});
        else if (std::abs(sum - 1.0) > kProbTolerance)
            out.push_back({where, "row sums to " + std::to_string(sum) + ", expected 1"});
    }
}

} // namespace detail

inline ValidationReport validate_env(const EnvModel& m) {
    ValidationReport out;
    const std::size_t nx = m.n_states(), nu = m.n_actions(), ny = m.n_obs();
    if (nx == 0) out.push_back({"states", "empty state set"});
    if (nu == 0) out.push_back({"actions", "empty action set"});
    if (ny == 0) out.push_back({"observations", "empty observation set"});
    if (!out.empty()) return out;

    bool sizes_ok = true;
    auto check_size = [&](const char* key, std::size_t got, std::size_t want) {
        if (got != want) {
            out.push_back({key, "has " + std::to_string(got) + " entries, expected " +
                                    std::to_string(want)});
            sizes_ok = false;
        }
    };
    check_size("initial", m.initial.size(), nx);
    check_size("transition", m.transition.size(), nu * nx * nx);
    check_size("observation", m.observation.size(), nx * ny);
    check_size("reward", m.reward.size(), nx * nu);

    if (sizes_ok) {
        if (!is_distribution(m.initial)) out.push_back({"initial", "not a distribution"});
        std::vector<std::string> trans_rows;
        for (std::size_t u = 0; u < nu; ++u)
            for (std::size_t x = 0; x < nx; ++x)
                trans_rows.push_back("[action " + std::to_string(u) + "][state " +
                                     std::to_string(x) + "]");
        detail::check_rows(out, "transition", m.transition, nx, trans_rows);
        std::vector<std::string> obs_rows;
        for (std::size_t x = 0; x < nx; ++x) obs_rows.push_back("[state " + std::to_string(x) + "]");
        detail::check_rows(out, "observation", m.observation, ny, obs_rows);
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t u = 0; u < nu; ++u) {
                const double v = m.r(x, u);
                if (!std::isfinite(v) || v < m.r_min || v > m.r_max)
                    out.push_back({"reward[state " + std::to_string(x) + "][action " +
                                       std::to_string(u) + "]",
                                   "value " + std::to_string(v) + " outside [r_min, r_max]"});
            }
    }
    if (!(m.r_min <= m.r_max)) out.push_back({"r_min", "r_min exceeds r_max"});
    if (!(m.discount > 0.0 && m.discount < 1.0))
        out.push_back({"discount", "must lie strictly between 0 and 1"});
    if (m.horizon < 1) out.push_back({"horizon", "must be a positive integer"});
    return out;
}

inline void require_valid(const ValidationReport& report, const std::string& what) {
    if (report.empty()) return;
    std::string msg = what + " failed validation:";
    for (const auto& v : report) msg += "\n  " + v.str();
    throw ValidationError(msg);
}

inline void require_valid(const EnvModel& m) { require_valid(validate_env(m), "environment"); }

} // namespace hairec
