#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nobl/embedding.hpp"
#include "nobl/features.hpp"
#include "nobl/fno.hpp"
#include "nobl/signal.hpp"

namespace nobl {

// Region of normalized latent space: either a convex polygon with vertices in
// counterclockwise order, or a disc.
struct LatentRegion {
    enum class Kind : std::uint8_t { hull = 0, disc = 1 };
    Kind kind = Kind::hull;
    std::vector<LatentPoint> vertices; // hull kind; strictly convex, CCW
    LatentPoint center;                // disc kind
    double radius = 0.0;               // disc kind; > 0
};

void validate(const LatentRegion& region);

LatentRegion disc_region(const LatentPoint& center, double radius);

// Smallest convex polygon containing the points. Vertices come back
// counterclockwise starting from the lexicographically smallest point;
// interior points, duplicates, and collinear boundary points are dropped.
// Fewer than three distinct points or an all-collinear cloud is degenerate
// and rejected with config_error.
LatentRegion convex_hull(std::span<const LatentPoint> points);

// Shoelace area for hulls, pi r^2 for discs.
double region_area(const LatentRegion& region);

// Half-plane test for hulls, distance test for discs. Boundary points count
// as inside up to eps.
bool region_contains(const LatentRegion& region, const LatentPoint& p,
                     double eps = 1e-12);

// Uniform draws inside a hull region: fan triangulation from vertex 0, a
// triangle picked by area weight, then a uniform barycentric sample. Three
// uniforms per point, so draws are reproducible from the seed alone.
std::vector<LatentPoint> sample_in_hull(const LatentRegion& region,
                                        std::size_t n, std::uint64_t seed);

// Default disc radius for local exploration around a known model.
inline constexpr double kNeighborhoodRadius = 0.15;

struct NeighborhoodDraw {
    std::vector<LatentPoint> points;
    // Draws landing outside the in-distribution square. Points are reported
    // exactly as drawn, never clipped back in.
    std::size_t outside_range = 0;
};

// Uniform draws from the disc around `center`; the sqrt on the radial
// uniform keeps the density flat in area.
NeighborhoodDraw sample_neighborhood(const LatentPoint& center, double radius,
                                     std::size_t n, std::uint64_t seed);

// CRC over the serialized parameter vector; ties predictions to the exact
// weights that produced them.
std::uint32_t checkpoint_digest(const Checkpoint& cp);

// Surrogate predictions for a batch of latent points under one stimulus.
// Traces share the stimulus grid and sit at the same index as the latent
// that produced them.
struct EnsembleResult {
    Stimulus stimulus;
    std::uint32_t digest = 0;
    std::vector<LatentPoint> latents;
    std::vector<Trace> traces;
};

void validate(const EnsembleResult& result);

// One forward pass for a single latent point.
Trace predict_trace(const Checkpoint& cp, const Stimulus& stim,
                    const LatentPoint& latent);

// One forward pass per latent. Results keep the input order no matter how
// many threads run; forward errors are rethrown with the offending latent
// index attached.
EnsembleResult ensemble_predict(const Checkpoint& cp, const Stimulus& stim,
                                std::span<const LatentPoint> latents,
                                int threads = 1);

// F-I curve where the trace producer is the surrogate instead of the
// reference model. Amplitudes must be strictly increasing.
FICurve surrogate_fi_curve(const Checkpoint& cp, const LatentPoint& latent,
                           const TimeGrid& grid, double onset_ms,
                           double duration_ms,
                           std::span<const double> amplitudes_na,
                           const FeatureConfig& fcfg = {});

// Named feature on a resolution x resolution lattice spanning the region's
// bounding box. Rows run along s (slow), columns along i (fast). Cells
// outside the region are masked and never evaluated; inside cells keep the
// extractor's undefined markers as empty optionals.
struct FeatureGridResult {
    std::string feature;
    LatentRegion region;
    Stimulus stimulus;
    std::vector<double> i_coords;
    std::vector<double> s_coords;
    std::vector<std::uint8_t> inside;          // s-major, i fastest
    std::vector<std::optional<double>> values; // aligned with `inside`
};

FeatureGridResult feature_grid(const Checkpoint& cp, const Stimulus& stim,
                               const LatentRegion& region, int resolution,
                               const std::string& feature, int threads = 1,
                               const FeatureConfig& fcfg = {});

// Container I/O in the same text-manifest + little-endian f32 block family
// as the dataset format. Trace and grid values are stored at single
// precision; predictions already carry float values, so those round-trip
// exactly.
void save_ensemble_result(const EnsembleResult& result,
                          const std::string& path);
EnsembleResult load_ensemble_result(const std::string& path);

void save_feature_grid(const FeatureGridResult& grid, const std::string& path);
FeatureGridResult load_feature_grid(const std::string& path);

// Per-trace feature table (one row per latent), for quick inspection.
std::string ensemble_summary_table(const EnsembleResult& result,
                                   const FeatureConfig& fcfg = {});

} // namespace nobl
