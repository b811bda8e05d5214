#pragma once

#include "glyphid/embed.hpp"
#include "glyphid/ids.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace glyphid {

inline constexpr int kDefaultKnnK = 15;
inline constexpr double kWeightEps = 1e-6;

/// Radical label -> confidence. Seeding and refinement both leave the values
/// nonnegative and summing to 1.
using ConfidenceDict = std::map<std::string, double>;

/// 1/n initialization: each distinct radical gets multiplicity/n.
ConfidenceDict seed_confidence(const CharEntry& entry);

/// How a neighbor's distance d turns into its aggregation weight:
///   Inverse  w = 1/(d+eps)   nearer neighbors dominate (default)
///   Literal  w = d           the distance itself
///   Neg      w = -d          monotone-decreasing alternative
enum class WeightMode { Inverse, Literal, Neg };

std::string_view weight_mode_name(WeightMode mode);
std::optional<WeightMode> parse_weight_mode(std::string_view name);
double neighbor_weight(double distance, WeightMode mode);

struct Neighbor {
    std::string component_id;
    double distance = 0;
    ConfidenceDict dict;
};

/// K nearest labeled store items, ascending by distance.
struct NeighborSet {
    std::vector<Neighbor> neighbors;
};

enum class AnnotationStatus { Seeded, Propagated, Unlabeled };

std::string_view annotation_status_name(AnnotationStatus s);
std::optional<AnnotationStatus> parse_annotation_status(std::string_view name);

struct StoreItem {
    std::string component_id;
    FeatureVec feature{};
    ConfidenceDict dict;
    AnnotationStatus status = AnnotationStatus::Unlabeled;
    std::vector<std::string> neighbor_ids; // audit trail of Propagated items
};

/// Component-id keyed feature/confidence store. Reads are concurrent-safe;
/// all mutation happens through put() on a single writer.
class AnnotationStore {
public:
    /// Insert or replace by component id.
    void put(StoreItem item);

    const StoreItem* find(const std::string& id) const;
    size_t size() const { return items_.size(); }
    long long labeled_count() const;
    const std::map<std::string, StoreItem>& items() const { return items_; }

private:
    std::map<std::string, StoreItem> items_;
};

/// Exact K nearest labeled items by Euclidean distance, ties broken by
/// component id. Throws NotEnoughNeighbors when fewer than k items are
/// labeled.
NeighborSet knn_query(const FeatureVec& target, const AnnotationStore& store, int k);

/// Aggregate neighbor dicts: score_c = sum_i w(d_i) * conf_c(i) over the key
/// union (absent keys contribute 0), then softmax over keys. Throws NoKeys
/// when every neighbor dict is empty.
ConfidenceDict refine_confidence(const NeighborSet& neighbors,
                                 WeightMode mode = WeightMode::Inverse);

/// Argmax key; ties go to the lexicographically smallest label. Throws
/// EmptyDict.
std::string assign_label(const ConfidenceDict& dict);

struct PropagateOptions {
    int k = kDefaultKnnK;
    WeightMode mode = WeightMode::Inverse;
    /// When set, items labeled during this pass immediately join the neighbor
    /// pool (transductive chaining); otherwise the pass reads a snapshot.
    bool chain = false;
};

/// Refine every Unlabeled item from the labeled pool, in component-id order.
/// Returns the number of items that became Propagated.
int propagate(AnnotationStore& store, const PropagateOptions& opts);

/// JSONL: `{component_id, feature:[...], dict:{label:conf}, status,
/// neighbor_ids?}`, one item per line, id-sorted.
void save_store(const AnnotationStore& store, const std::filesystem::path& path);
AnnotationStore load_store(const std::filesystem::path& path);

} // namespace glyphid
