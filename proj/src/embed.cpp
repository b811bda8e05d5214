#include "glyphid/embed.hpp"

#include "glyphid/errors.hpp"
#include "glyphid/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>

namespace glyphid {

double euclidean(const FeatureVec& a, const FeatureVec& b) {
    double s = 0;
    for (int i = 0; i < kFeatureDim; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

namespace {

int zone_of(int coord, int extent) {
    return std::min(kZoneGrid - 1, coord * kZoneGrid / extent);
}

std::vector<double> describe_bitmap(const Bitmap& bm) {
    auto box = bm.foreground_box();
    if (!box) fail(Errc::EmptyMaskError, "cannot describe a blank mask");
    const int w = bm.width, h = bm.height;

    std::vector<double> desc(kRawDim, 0.0);
    double* density = desc.data();
    double* hist = desc.data() + kZoneGrid * kZoneGrid;
    double* geom = desc.data() + kZoneGrid * kZoneGrid * (1 + kOrientBins);

    std::array<long long, kZoneGrid * kZoneGrid> zone_area{};
    auto value = [&](int x, int y) -> double {
        return bm.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)) ? 1.0 : 0.0;
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int zone = zone_of(y, h) * kZoneGrid + zone_of(x, w);
            ++zone_area[static_cast<size_t>(zone)];
            if (bm.at(x, y)) density[zone] += 1.0;

            double gx = (value(x + 1, y) - value(x - 1, y)) / 2.0;
            double gy = (value(x, y + 1) - value(x, y - 1)) / 2.0;
            double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            double theta = std::atan2(gy, gx); // [-pi, pi]
            int bin = static_cast<int>(std::floor((theta + std::numbers::pi) /
                                                  (2.0 * std::numbers::pi / kOrientBins)));
            bin = ((bin % kOrientBins) + kOrientBins) % kOrientBins;
            hist[zone * kOrientBins + bin] += mag;
        }
    }
    for (int z = 0; z < kZoneGrid * kZoneGrid; ++z) {
        density[z] /= static_cast<double>(zone_area[static_cast<size_t>(z)]);
        double n = 0;
        for (int b = 0; b < kOrientBins; ++b) {
            double v = hist[z * kOrientBins + b];
            n += v * v;
        }
        if (n > 0) {
            n = std::sqrt(n);
            for (int b = 0; b < kOrientBins; ++b) hist[z * kOrientBins + b] /= n;
        }
    }
    geom[0] = (box->x0 + box->x1) / 2.0 / (w > 1 ? w - 1 : 1);
    geom[1] = (box->y0 + box->y1) / 2.0 / (h > 1 ? h - 1 : 1);
    geom[2] = static_cast<double>(box->width()) / w;
    geom[3] = static_cast<double>(box->height()) / h;
    return desc;
}

} // namespace

std::vector<double> describe(const ComponentMask& mask) { return describe_bitmap(mask.mask); }

std::vector<double> describe_normalized(const ComponentMask& mask) {
    if (mask.area == 0) fail(Errc::EmptyMaskError, "cannot describe a blank mask");
    return describe_bitmap(normalize_bitmap(mask.mask));
}

Projection Projection::identity() {
    Projection p;
    p.weights.assign(static_cast<size_t>(kFeatureDim) * kRawDim, 0.0);
    p.bias.assign(kFeatureDim, 0.0);
    for (int i = 0; i < kFeatureDim; ++i) p.weights[static_cast<size_t>(i) * kRawDim + i] = 1.0;
    return p;
}

Projection Projection::random(uint64_t seed) {
    Projection p;
    p.weights.resize(static_cast<size_t>(kFeatureDim) * kRawDim);
    p.bias.assign(kFeatureDim, 0.0);
    Rng rng(seed);
    double scale = 1.0 / std::sqrt(static_cast<double>(kRawDim));
    for (double& w : p.weights) w = rng.gauss() * scale;
    return p;
}

FeatureVec embed(std::span<const double> desc, const Projection& proj) {
    if (desc.size() != kRawDim)
        fail(Errc::InvalidArgument,
             "descriptor length " + std::to_string(desc.size()) + ", expected " +
                 std::to_string(kRawDim));
    if (proj.weights.size() != static_cast<size_t>(kFeatureDim) * kRawDim ||
        proj.bias.size() != kFeatureDim)
        fail(Errc::InvalidArgument, "projection has wrong shape");

    FeatureVec f{};
    double norm2 = 0;
    for (int i = 0; i < kFeatureDim; ++i) {
        double z = proj.bias[static_cast<size_t>(i)];
        const double* row = proj.weights.data() + static_cast<size_t>(i) * kRawDim;
        for (int j = 0; j < kRawDim; ++j) z += row[j] * desc[static_cast<size_t>(j)];
        f[i] = z;
        norm2 += z * z;
    }
    if (norm2 <= 0.0) fail(Errc::ZeroVector, "projection output is all zeros");
    double inv = 1.0 / std::sqrt(norm2);
    for (double& v : f) v *= inv;
    return f;
}

LossGrad contrastive_loss(const ContrastiveBatch& batch) {
    if (!(batch.tau > 0)) fail(Errc::InvalidArgument, "tau must be positive");
    const int k = 1 + static_cast<int>(batch.k_neg.size());

    auto dot = [](const FeatureVec& a, const FeatureVec& b) {
        double s = 0;
        for (int i = 0; i < kFeatureDim; ++i) s += a[i] * b[i];
        return s;
    };
    std::vector<double> logits(static_cast<size_t>(k));
    logits[0] = dot(batch.q, batch.k_pos) / batch.tau;
    for (size_t i = 0; i < batch.k_neg.size(); ++i)
        logits[i + 1] = dot(batch.q, batch.k_neg[i]) / batch.tau;

    double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0;
    for (double l : logits) sum += std::exp(l - m);

    LossGrad out;
    out.loss = m + std::log(sum) - logits[0];
    // d loss / d q = (sum_i softmax_i * k_i - k_pos) / tau
    for (size_t i = 0; i < logits.size(); ++i) {
        double p = std::exp(logits[i] - m) / sum;
        const FeatureVec& key = i == 0 ? batch.k_pos : batch.k_neg[i - 1];
        for (int d = 0; d < kFeatureDim; ++d) out.grad_q[d] += p * key[d];
    }
    for (int d = 0; d < kFeatureDim; ++d)
        out.grad_q[d] = (out.grad_q[d] - batch.k_pos[d]) / batch.tau;
    return out;
}

namespace {

/// Augmented copy in normalized space: the content is rescaled into a canvas
/// inset by 1..jitter pixels and nudged off center, which survives the
/// crop-and-normalize step that plain translation would cancel out.
Bitmap augment_bitmap(const Bitmap& normalized, int jitter, Rng& rng) {
    if (jitter < 1) return normalized;
    int m = static_cast<int>(rng.range(1, jitter));
    int dx = static_cast<int>(rng.range(-m, m));
    int dy = static_cast<int>(rng.range(-m, m));

    auto box = normalized.foreground_box();
    Bitmap content = crop_to(normalized, *box);
    int side = std::max(1, kCanvas - 2 * m);
    int sw, sh;
    if (content.width >= content.height) {
        sw = side;
        sh = std::max<int>(1, static_cast<int>(std::llround(
                                  static_cast<double>(side) * content.height / content.width)));
    } else {
        sh = side;
        sw = std::max<int>(1, static_cast<int>(std::llround(
                                  static_cast<double>(side) * content.width / content.height)));
    }
    Bitmap scaled = scale_nearest(content, sw, sh);
    Bitmap out(normalized.width, normalized.height);
    int ox = std::clamp((out.width - sw) / 2 + dx, 0, out.width - sw);
    int oy = std::clamp((out.height - sh) / 2 + dy, 0, out.height - sh);
    for (int y = 0; y < sh; ++y)
        for (int x = 0; x < sw; ++x)
            if (scaled.at(x, y)) out.set(ox + x, oy + y);
    return out;
}

} // namespace

TrainResult train_projection(std::span<const TrainSample> samples, const TrainOptions& opts) {
    if (opts.epochs < 1) fail(Errc::InvalidArgument, "epochs must be >= 1");
    if (!(opts.tau > 0) || !(opts.lr0 > 0) || !(opts.lr1 > 0))
        fail(Errc::InvalidArgument, "tau and learning rates must be positive");

    std::map<std::string, std::vector<size_t>> by_label;
    for (size_t i = 0; i < samples.size(); ++i) by_label[samples[i].label].push_back(i);
    if (by_label.size() < 2)
        fail(Errc::InsufficientData, "contrastive training needs at least two labels");
    if (!opts.augment)
        for (const auto& [label, members] : by_label)
            if (members.size() < 2)
                fail(Errc::InsufficientData,
                     "label \"" + label + "\" has one sample and augmentation is off");

    std::vector<Bitmap> normalized(samples.size());
    std::vector<std::vector<double>> base_desc(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        normalized[i] = normalize_bitmap(samples[i].mask);
        base_desc[i] = describe_bitmap(normalized[i]);
    }
    std::vector<std::string> labels;
    for (const auto& [label, members] : by_label) labels.push_back(label);

    Rng rng(opts.seed);
    Projection proj = Projection::random(rng.next_u64());

    const long long total_steps =
        static_cast<long long>(opts.epochs) * static_cast<long long>(samples.size());
    long long step = 0;
    TrainResult result;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::vector<size_t> order(samples.size());
        std::iota(order.begin(), order.end(), size_t{0});
        rng.shuffle(order);

        double epoch_loss = 0;
        for (size_t i : order) {
            const std::string& label = samples[i].label;
            const auto& same = by_label[label];

            std::vector<double> q_desc = opts.augment
                                             ? describe_bitmap(augment_bitmap(normalized[i],
                                                                              opts.jitter, rng))
                                             : base_desc[i];
            size_t pos_idx = i;
            if (same.size() > 1) {
                size_t pick = same[rng.below(same.size() - 1)];
                pos_idx = pick == i ? same.back() : pick; // any same-label sample but i
            }

            ContrastiveBatch batch;
            batch.tau = opts.tau;
            batch.q = embed(q_desc, proj);
            batch.k_pos = embed(base_desc[pos_idx], proj);
            for (const auto& other : labels) {
                if (other == label) continue;
                const auto& members = by_label[other];
                batch.k_neg.push_back(embed(base_desc[members[rng.below(members.size())]], proj));
            }

            LossGrad lg = contrastive_loss(batch);
            epoch_loss += lg.loss;

            // Chain rule through L2 normalization: q = z/|z|,
            // dL/dz = (g - (g.q)q) / |z|, then the affine layer.
            double znorm = 0;
            {
                double z;
                for (int d = 0; d < kFeatureDim; ++d) {
                    z = proj.bias[static_cast<size_t>(d)];
                    const double* row = proj.weights.data() + static_cast<size_t>(d) * kRawDim;
                    for (int j = 0; j < kRawDim; ++j) z += row[j] * q_desc[static_cast<size_t>(j)];
                    znorm += z * z;
                }
                znorm = std::sqrt(znorm);
            }
            double g_dot_q = 0;
            for (int d = 0; d < kFeatureDim; ++d) g_dot_q += lg.grad_q[d] * batch.q[d];

            double lr = total_steps > 1 ? opts.lr0 + (opts.lr1 - opts.lr0) * step / (total_steps - 1)
                                        : opts.lr0;
            for (int d = 0; d < kFeatureDim; ++d) {
                double dz = (lg.grad_q[d] - g_dot_q * batch.q[d]) / znorm;
                double* row = proj.weights.data() + static_cast<size_t>(d) * kRawDim;
                for (int j = 0; j < kRawDim; ++j)
                    row[j] -= lr * dz * q_desc[static_cast<size_t>(j)];
                proj.bias[static_cast<size_t>(d)] -= lr * dz;
            }
            ++step;
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(samples.size()));
    }
    result.projection = std::move(proj);
    return result;
}

namespace {

constexpr char kProjMagic[7] = {'P', '3', 'P', 'R', 'O', 'J', '1'};

void write_f64_le(std::ofstream& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    out.write(buf, 8);
}

double read_f64_le(std::ifstream& in) {
    char buf[8];
    in.read(buf, 8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
        bits |= static_cast<uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

} // namespace

void save_projection(const Projection& proj, const std::filesystem::path& path) {
    if (proj.weights.size() != static_cast<size_t>(kFeatureDim) * kRawDim ||
        proj.bias.size() != kFeatureDim)
        fail(Errc::InvalidArgument, "projection has wrong shape");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::IoError, "cannot write projection " + path.string());
    out.write(kProjMagic, sizeof(kProjMagic));
    for (double w : proj.weights) write_f64_le(out, w);
    for (double b : proj.bias) write_f64_le(out, b);
    if (!out) fail(Errc::IoError, "write failed for " + path.string());
}

Projection load_projection(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::IoError, "cannot open projection " + path.string());
    char magic[sizeof(kProjMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kProjMagic, sizeof(magic)) != 0)
        fail(Errc::SchemaError, path.string() + " is not a projection checkpoint");
    Projection proj;
    proj.weights.resize(static_cast<size_t>(kFeatureDim) * kRawDim);
    proj.bias.resize(kFeatureDim);
    for (double& w : proj.weights) w = read_f64_le(in);
    for (double& b : proj.bias) b = read_f64_le(in);
    if (!in) fail(Errc::SchemaError, path.string() + " is truncated");
    if (in.peek() != std::ifstream::traits_type::eof())
        fail(Errc::SchemaError, path.string() + " has trailing bytes");
    return proj;
}

void save_loss_curve(std::span<const double> curve, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(Errc::IoError, "cannot write loss curve " + path.string());
    out << "epoch,loss\n";
    out.precision(17);
    for (size_t i = 0; i < curve.size(); ++i) out << (i + 1) << "," << curve[i] << "\n";
    if (!out) fail(Errc::IoError, "write failed for " + path.string());
}

} // namespace glyphid
