#include "glyphid/annotate.hpp"

#include "glyphid/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace glyphid {

ConfidenceDict seed_confidence(const CharEntry& entry) {
    if (entry.n < 1) fail(Errc::InvalidArgument, "entry has no radicals");
    ConfidenceDict dict;
    for (const auto& [label, count] : entry.radicals)
        dict[label] = static_cast<double>(count) / entry.n;
    return dict;
}

std::string_view weight_mode_name(WeightMode mode) {
    switch (mode) {
    case WeightMode::Inverse: return "inverse";
    case WeightMode::Literal: return "literal";
    case WeightMode::Neg: return "neg";
    }
    return "?";
}

std::optional<WeightMode> parse_weight_mode(std::string_view name) {
    if (name == "inverse") return WeightMode::Inverse;
    if (name == "literal") return WeightMode::Literal;
    if (name == "neg") return WeightMode::Neg;
    return std::nullopt;
}

double neighbor_weight(double distance, WeightMode mode) {
    switch (mode) {
    case WeightMode::Inverse: return 1.0 / (distance + kWeightEps);
    case WeightMode::Literal: return distance;
    case WeightMode::Neg: return -distance;
    }
    fail(Errc::InvalidArgument, "bad weight mode");
}

std::string_view annotation_status_name(AnnotationStatus s) {
    switch (s) {
    case AnnotationStatus::Seeded: return "Seeded";
    case AnnotationStatus::Propagated: return "Propagated";
    case AnnotationStatus::Unlabeled: return "Unlabeled";
    }
    return "?";
}

std::optional<AnnotationStatus> parse_annotation_status(std::string_view name) {
    if (name == "Seeded") return AnnotationStatus::Seeded;
    if (name == "Propagated") return AnnotationStatus::Propagated;
    if (name == "Unlabeled") return AnnotationStatus::Unlabeled;
    return std::nullopt;
}

void AnnotationStore::put(StoreItem item) {
    if (item.component_id.empty()) fail(Errc::InvalidArgument, "component id is empty");
    items_[item.component_id] = std::move(item);
}

const StoreItem* AnnotationStore::find(const std::string& id) const {
    auto it = items_.find(id);
    return it == items_.end() ? nullptr : &it->second;
}

long long AnnotationStore::labeled_count() const {
    long long n = 0;
    for (const auto& [id, item] : items_) n += (item.status != AnnotationStatus::Unlabeled);
    return n;
}

namespace {

NeighborSet knn_scan(const FeatureVec& target, const std::vector<const StoreItem*>& pool, int k) {
    if (k < 1) fail(Errc::InvalidArgument, "k must be >= 1");
    if (static_cast<size_t>(k) > pool.size())
        fail(Errc::NotEnoughNeighbors, "need " + std::to_string(k) + " labeled items, have " +
                                           std::to_string(pool.size()));
    std::vector<std::pair<double, const StoreItem*>> scored;
    scored.reserve(pool.size());
    for (const StoreItem* item : pool) scored.emplace_back(euclidean(target, item->feature), item);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second->component_id < b.second->component_id;
    });

    NeighborSet out;
    out.neighbors.reserve(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i)
        out.neighbors.push_back(
            {scored[static_cast<size_t>(i)].second->component_id,
             scored[static_cast<size_t>(i)].first, scored[static_cast<size_t>(i)].second->dict});
    return out;
}

std::vector<const StoreItem*> labeled_pool(const AnnotationStore& store) {
    std::vector<const StoreItem*> pool;
    for (const auto& [id, item] : store.items())
        if (item.status != AnnotationStatus::Unlabeled) pool.push_back(&item);
    return pool;
}

} // namespace

NeighborSet knn_query(const FeatureVec& target, const AnnotationStore& store, int k) {
    return knn_scan(target, labeled_pool(store), k);
}

ConfidenceDict refine_confidence(const NeighborSet& neighbors, WeightMode mode) {
    if (neighbors.neighbors.empty()) fail(Errc::InvalidArgument, "neighbor set is empty");
    std::set<std::string> keys;
    for (const auto& nb : neighbors.neighbors)
        for (const auto& [label, conf] : nb.dict) keys.insert(label);
    if (keys.empty()) fail(Errc::NoKeys, "every neighbor dictionary is empty");

    std::map<std::string, double> score;
    for (const auto& key : keys) score[key] = 0.0;
    for (const auto& nb : neighbors.neighbors) {
        double w = neighbor_weight(nb.distance, mode);
        for (const auto& [label, conf] : nb.dict) score[label] += w * conf;
    }

    double m = score.begin()->second;
    for (const auto& [label, s] : score) m = std::max(m, s);
    double sum = 0;
    for (auto& [label, s] : score) {
        s = std::exp(s - m);
        sum += s;
    }
    ConfidenceDict out;
    for (const auto& [label, s] : score) out[label] = s / sum;
    return out;
}

std::string assign_label(const ConfidenceDict& dict) {
    if (dict.empty()) fail(Errc::EmptyDict, "confidence dictionary is empty");
    auto best = dict.begin();
    for (auto it = std::next(dict.begin()); it != dict.end(); ++it)
        if (it->second > best->second) best = it; // ties keep the smaller label
    return best->first;
}

int propagate(AnnotationStore& store, const PropagateOptions& opts) {
    std::vector<const StoreItem*> pool = labeled_pool(store);
    std::vector<std::string> todo;
    for (const auto& [id, item] : store.items())
        if (item.status == AnnotationStatus::Unlabeled) todo.push_back(id);

    // Updates are staged and committed after the scan so that snapshot mode
    // reads a consistent pool; chain mode commits as it goes instead.
    std::vector<StoreItem> staged;
    for (const std::string& id : todo) {
        const StoreItem* item = store.find(id);
        NeighborSet nb = knn_scan(item->feature, pool, opts.k);

        StoreItem updated = *item;
        updated.dict = refine_confidence(nb, opts.mode);
        updated.status = AnnotationStatus::Propagated;
        updated.neighbor_ids.clear();
        for (const auto& n : nb.neighbors) updated.neighbor_ids.push_back(n.component_id);

        if (opts.chain) {
            store.put(std::move(updated));
            pool.push_back(store.find(id));
        } else {
            staged.push_back(std::move(updated));
        }
    }
    int count = static_cast<int>(opts.chain ? todo.size() : staged.size());
    for (auto& item : staged) store.put(std::move(item));
    return count;
}

void save_store(const AnnotationStore& store, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(Errc::IoError, "cannot write store " + path.string());
    for (const auto& [id, item] : store.items()) {
        nlohmann::json j;
        j["component_id"] = id;
        j["feature"] = item.feature;
        j["dict"] = item.dict;
        j["status"] = std::string(annotation_status_name(item.status));
        if (!item.neighbor_ids.empty()) j["neighbor_ids"] = item.neighbor_ids;
        out << j.dump() << "\n";
    }
    if (!out) fail(Errc::IoError, "write failed for " + path.string());
}

AnnotationStore load_store(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::IoError, "cannot open store " + path.string());
    AnnotationStore store;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            fail(Errc::SchemaError, "line " + std::to_string(line_no) + ": not a JSON object");
        StoreItem item;
        try {
            item.component_id = j.at("component_id").get<std::string>();
            auto feature = j.at("feature").get<std::vector<double>>();
            if (feature.size() != kFeatureDim)
                fail(Errc::SchemaError, "line " + std::to_string(line_no) + ": feature length " +
                                            std::to_string(feature.size()));
            std::copy(feature.begin(), feature.end(), item.feature.begin());
            item.dict = j.at("dict").get<std::map<std::string, double>>();
            std::string status = j.at("status").get<std::string>();
            auto s = parse_annotation_status(status);
            if (!s)
                fail(Errc::SchemaError,
                     "line " + std::to_string(line_no) + ": unknown status \"" + status + "\"");
            item.status = *s;
            if (j.contains("neighbor_ids"))
                item.neighbor_ids = j.at("neighbor_ids").get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& e) {
            fail(Errc::SchemaError, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (store.find(item.component_id))
            fail(Errc::DuplicateId, "line " + std::to_string(line_no) + ": duplicate component \"" +
                                        item.component_id + "\"");
        store.put(std::move(item));
    }
    return store;
}

} // namespace glyphid
