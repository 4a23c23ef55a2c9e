#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smalldiff/model.hpp"
#include "smalldiff/rng.hpp"

namespace smalldiff::sim {

enum class GridLayout { Uniform, Jittered };

/// Observation times 0 = t_0 < t_1 < ... < t_n = T.
class SamplingGrid {
public:
    /// Throws std::invalid_argument unless `times` has at least two entries,
    /// starts at exactly 0 and is strictly increasing.
    explicit SamplingGrid(std::vector<double> times, std::vector<std::string> warnings = {});

    [[nodiscard]] std::span<const double> times() const noexcept { return times_; }
    [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
    [[nodiscard]] std::size_t intervals() const noexcept { return times_.size() - 1; }
    [[nodiscard]] double horizon() const noexcept { return times_.back(); }
    /// Largest gap between adjacent times (h_eps).
    [[nodiscard]] double mesh() const noexcept { return mesh_; }
    /// Whether the grid was built under the h = o(eps^2) regime.
    [[nodiscard]] bool scheme_ok() const noexcept { return scheme_ok_; }
    [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    void set_scheme_ok(bool ok) noexcept { scheme_ok_ = ok; }
    void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

private:
    std::vector<double> times_;
    double mesh_ = 0.0;
    bool scheme_ok_ = true;
    std::vector<std::string> warnings_;
};

/// Simulation-resolution path retained for diagnostics.
struct FinePath {
    std::vector<double> times;
    std::vector<double> values;
    /// Brownian increments W_{s_{k+1}} - W_{s_k}, one per fine step.
    std::vector<double> dW;
    /// Position of each observation time within `times`.
    std::vector<std::size_t> obs_index;
};

struct ObservedPath {
    SamplingGrid grid;
    std::vector<double> values;
    double eps = 0.0;
    std::uint64_t seed = 0;
    std::optional<FinePath> fine;
};

/// Uniform or jittered grid with target mesh min(eps^gamma, T). A jittered
/// grid moves every interior time uniformly within +-25% of its cell using
/// an independent stream keyed by `jitter_key`. `scheme_ok` is gamma > 2.
/// Throws std::invalid_argument on T <= 0, eps outside (0, 1] or gamma <= 0.
[[nodiscard]] SamplingGrid make_grid(double T, double eps, double gamma, GridLayout layout = GridLayout::Uniform,
                                     rng::StreamKey jitter_key = {});

/// Paths whose magnitude exceeds this are aborted.
inline constexpr double kBlowUpBound = 1e10;

/// Euler-Maruyama on a refinement that splits every observation interval
/// into `substeps` equal pieces. The draws come from `key` with stream
/// Noise, indexed by fine step, so the output is a pure function of the
/// arguments. The grid horizon must equal the model horizon.
/// Throws std::invalid_argument on bad arguments, DivergenceError on
/// blow-up or coefficient evaluation failure.
[[nodiscard]] ObservedPath simulate_path(const model::ModelSpec& model, const SamplingGrid& grid,
                                         std::size_t substeps, rng::StreamKey key, bool keep_fine = false);

struct MomentReport {
    double c2 = 0.0;  ///< fitted constant for k = 2
    double c4 = 0.0;  ///< fitted constant for k = 4
    std::size_t n_paths = 0;
    std::size_t n_intervals = 0;
    double eps = 0.0;
    double mesh = 0.0;
};

inline constexpr std::size_t kMinMomentPaths = 100;

/// Fitted constants C_k = max_i mean_paths |dX_i|^k / max(d_i^k, eps^k d_i^(k/2))
/// for k in {2, 4} over the observation intervals of a shared grid.
/// Throws std::invalid_argument when fewer than kMinMomentPaths paths are
/// given or the paths do not share a grid and eps.
[[nodiscard]] MomentReport increment_moments(std::span<const ObservedPath> paths);

}  // namespace smalldiff::sim
