#pragma once

#include "glyphid/segment.hpp"

#include <array>
#include <filesystem>
#include <span>
#include <vector>

namespace glyphid {

inline constexpr int kFeatureDim = 128;
inline constexpr int kZoneGrid = 4;   // 4x4 zoning
inline constexpr int kOrientBins = 8; // gradient orientation bins per zone
/// Raw descriptor: zoned density (16) + zoned orientation histograms (128)
/// + normalized bbox geometry (4).
inline constexpr int kRawDim = kZoneGrid * kZoneGrid * (1 + kOrientBins) + 4;
inline constexpr double kDefaultTau = 0.07;

using FeatureVec = std::array<double, kFeatureDim>;

double euclidean(const FeatureVec& a, const FeatureVec& b);

/// Deterministic raw descriptor of a mask raster: per-zone ink density,
/// per-zone magnitude-weighted gradient-orientation histogram (central
/// differences, block L2-normalized), then bbox center and size normalized by
/// the canvas. Zones are canvas-absolute. Throws EmptyMaskError.
std::vector<double> describe(const ComponentMask& mask);

/// describe() of the mask content cropped and size-normalized first, so the
/// same shape at different positions or scales gets the same descriptor.
std::vector<double> describe_normalized(const ComponentMask& mask);

/// Trainable affine map from raw descriptors to the feature space.
struct Projection {
    std::vector<double> weights; // kFeatureDim x kRawDim, row-major
    std::vector<double> bias;    // kFeatureDim

    static Projection identity();      // passes the first kFeatureDim dims through
    static Projection random(uint64_t seed);
};

/// Affine projection + L2 normalization. Throws ZeroVector when the
/// projection output is all zeros.
FeatureVec embed(std::span<const double> desc, const Projection& proj);

/// One query against K keys; the positive key is among the K.
struct ContrastiveBatch {
    FeatureVec q;
    FeatureVec k_pos;
    std::vector<FeatureVec> k_neg;
    double tau = kDefaultTau;
};

struct LossGrad {
    double loss = 0;
    FeatureVec grad_q{}; // analytic d loss / d q
};

/// loss = -log( exp(q·k+/τ) / Σ_i exp(q·k_i/τ) ), max-shifted; keys are
/// [k_pos] followed by k_neg.
LossGrad contrastive_loss(const ContrastiveBatch& batch);

struct TrainSample {
    std::string label;
    Bitmap mask; // any resolution; content is normalized before describing
};

struct TrainOptions {
    int epochs = 50;
    double lr0 = 0.5;   // learning rate, decayed linearly ...
    double lr1 = 0.05;  // ... to this value over all steps
    double tau = kDefaultTau;
    bool augment = true; // rescale/offset copies stand in for camera jitter
    int jitter = 2;      // max inset/offset of augmented copies, in pixels
    uint64_t seed = 0;
};

struct TrainResult {
    Projection projection;
    std::vector<double> loss_curve; // mean loss per epoch
};

/// SGD on the contrastive loss where positives are same-label pairs (or
/// augmented copies) and negatives come from the other labels. Keys are
/// recomputed from the current projection each step but take no gradient.
/// Deterministic given the seed. Throws InsufficientData when fewer than two
/// labels are present, or when augmentation is off and a label has a single
/// sample.
TrainResult train_projection(std::span<const TrainSample> samples, const TrainOptions& opts);

/// Checkpoint: magic "P3PROJ1", then little-endian f64 weights (row-major)
/// and bias. Sizes are fixed by kFeatureDim and kRawDim.
void save_projection(const Projection& proj, const std::filesystem::path& path);
Projection load_projection(const std::filesystem::path& path);

/// One `epoch,loss` line per epoch.
void save_loss_curve(std::span<const double> curve, const std::filesystem::path& path);

} // namespace glyphid
