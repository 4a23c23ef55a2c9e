#include "smalldiff/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "smalldiff/error.hpp"

namespace smalldiff::sim {

SamplingGrid::SamplingGrid(std::vector<double> times, std::vector<std::string> warnings)
    : times_(std::move(times)), warnings_(std::move(warnings)) {
    if (times_.size() < 2) {
        throw std::invalid_argument("sampling grid needs at least two times");
    }
    if (times_.front() != 0.0) {
        throw std::invalid_argument("sampling grid must start at t = 0");
    }
    for (std::size_t i = 1; i < times_.size(); ++i) {
        if (!(times_[i] > times_[i - 1]) || !std::isfinite(times_[i])) {
            throw std::invalid_argument("sampling grid times must be finite and strictly increasing");
        }
        mesh_ = std::max(mesh_, times_[i] - times_[i - 1]);
    }
}

SamplingGrid make_grid(double T, double eps, double gamma, GridLayout layout, rng::StreamKey jitter_key) {
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw std::invalid_argument("make_grid: T must be positive");
    }
    if (!(eps > 0.0) || eps > 1.0) {
        throw std::invalid_argument("make_grid: eps must lie in (0, 1]");
    }
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("make_grid: gamma must be positive");
    }
    const double target = std::min(std::pow(eps, gamma), T);
    // The relative slack keeps exact ratios such as T / 0.25 from rounding up.
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(T / target * (1.0 - 1e-12))));
    if (n > (std::size_t{1} << 40)) {
        throw std::invalid_argument("make_grid: mesh too fine for eps^gamma");
    }
    const double cell = T / static_cast<double>(n);

    std::vector<double> times(n + 1);
    times[0] = 0.0;
    times[n] = T;
    jitter_key.stream = rng::Stream::Jitter;
    for (std::size_t i = 1; i < n; ++i) {
        double t = T * (static_cast<double>(i) / static_cast<double>(n));
        if (layout == GridLayout::Jittered) {
            t += (rng::uniform(jitter_key, i) - 0.5) * 0.5 * cell;
        }
        times[i] = t;
    }

    SamplingGrid grid(std::move(times));
    grid.set_scheme_ok(gamma > 2.0);
    if (gamma <= 2.0) {
        grid.add_warning("gamma <= 2: mesh eps^gamma is not o(eps^2), outside the sampling scheme");
    }
    return grid;
}

ObservedPath simulate_path(const model::ModelSpec& model, const SamplingGrid& grid, std::size_t substeps,
                           rng::StreamKey key, bool keep_fine) {
    if (substeps < 1) {
        throw std::invalid_argument("simulate_path: substeps must be >= 1");
    }
    if (std::fabs(grid.horizon() - model.horizon()) > 1e-12 * model.horizon()) {
        throw std::invalid_argument("simulate_path: grid horizon differs from model horizon");
    }
    key.stream = rng::Stream::Noise;
    const auto obs = grid.times();
    const double eps = model.eps();
    const auto& drift = model.drift();
    const auto& diffusion = model.diffusion();

    ObservedPath path{grid, {}, eps, key.seed, std::nullopt};
    path.values.resize(obs.size());
    path.values[0] = model.x0();

    FinePath fine;
    if (keep_fine) {
        const std::size_t n_fine = grid.intervals() * substeps;
        fine.times.reserve(n_fine + 1);
        fine.values.reserve(n_fine + 1);
        fine.dW.reserve(n_fine);
        fine.obs_index.reserve(obs.size());
        fine.times.push_back(0.0);
        fine.values.push_back(model.x0());
        fine.obs_index.push_back(0);
    }

    double x = model.x0();
    std::uint64_t step = 0;
    for (std::size_t i = 1; i < obs.size(); ++i) {
        const double start = obs[i - 1];
        const double dt = (obs[i] - start) / static_cast<double>(substeps);
        const double sqrt_dt = std::sqrt(dt);
        for (std::size_t j = 0; j < substeps; ++j, ++step) {
            const double t = start + static_cast<double>(j) * dt;
            double s = 0.0;
            double sig = 0.0;
            try {
                s = drift.eval(x);
                sig = diffusion.eval(x);
            } catch (const EvalError& e) {
                throw DivergenceError(std::string("coefficient evaluation failed (") + e.what() + ")", t);
            }
            const double dw = sqrt_dt * rng::normal(key, step);
            x = x + s * dt + eps * sig * dw;
            const double t_next = j + 1 == substeps ? obs[i] : start + static_cast<double>(j + 1) * dt;
            if (!std::isfinite(x) || std::fabs(x) > kBlowUpBound) {
                throw DivergenceError("simulated state left the finite range", t_next);
            }
            if (keep_fine) {
                fine.times.push_back(t_next);
                fine.values.push_back(x);
                fine.dW.push_back(dw);
            }
        }
        path.values[i] = x;
        if (keep_fine) {
            fine.obs_index.push_back(fine.times.size() - 1);
        }
    }
    if (keep_fine) {
        path.fine = std::move(fine);
    }
    return path;
}

MomentReport increment_moments(std::span<const ObservedPath> paths) {
    if (paths.size() < kMinMomentPaths) {
        throw std::invalid_argument("increment_moments: insufficient sample, need at least 100 paths");
    }
    const auto& ref = paths.front();
    const auto times = ref.grid.times();
    for (const auto& p : paths) {
        if (p.eps != ref.eps || !std::equal(times.begin(), times.end(), p.grid.times().begin(),
                                            p.grid.times().end())) {
            throw std::invalid_argument("increment_moments: paths must share a grid and eps");
        }
    }

    MomentReport report;
    report.n_paths = paths.size();
    report.n_intervals = ref.grid.intervals();
    report.eps = ref.eps;
    report.mesh = ref.grid.mesh();
    const double n = static_cast<double>(paths.size());
    for (std::size_t i = 1; i < times.size(); ++i) {
        double m2 = 0.0;
        double m4 = 0.0;
        for (const auto& p : paths) {
            const double d = p.values[i] - p.values[i - 1];
            const double d2 = d * d;
            m2 += d2;
            m4 += d2 * d2;
        }
        m2 /= n;
        m4 /= n;
        const double dt = times[i] - times[i - 1];
        const double e = ref.eps;
        const double bound2 = std::max(dt * dt, e * e * dt);
        const double bound4 = std::max(std::pow(dt, 4), std::pow(e, 4) * dt * dt);
        report.c2 = std::max(report.c2, m2 / bound2);
        report.c4 = std::max(report.c4, m4 / bound4);
    }
    return report;
}

}  // namespace smalldiff::sim
