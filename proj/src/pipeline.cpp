#include "glyphid/pipeline.hpp"

#include "glyphid/errors.hpp"
#include "glyphid/image_io.hpp"
#include "glyphid/rng.hpp"
#include "glyphid/utf8.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace glyphid {

Glyph load_glyph(const Manifest& manifest, const ManifestRecord& record, int threshold) {
    Glyph g;
    g.id = record.id;
    g.period = record.period;
    g.category = record.category;
    g.bitmap = normalize_raster(read_gray_image(manifest.resolve_path(record)), threshold);
    return g;
}

bool is_trainable(const ManifestRecord& record, const HoldoutPlan* plan,
                  const std::set<Period>* periods) {
    if (!record.category) return false;
    if (periods && !periods->count(record.period)) return false;
    if (plan) {
        auto it = plan->train.find(record.period);
        if (it == plan->train.end() || !it->second.count(*record.category)) return false;
    }
    return true;
}

std::vector<const ManifestRecord*> test_records(const Manifest& manifest, const HoldoutPlan& plan,
                                                std::optional<Period> period) {
    std::vector<const ManifestRecord*> out;
    for (const auto& r : manifest.records()) {
        if (!r.category) continue;
        if (period && r.period != *period) continue;
        auto it = plan.undeciphered.find(r.period);
        if (it != plan.undeciphered.end() && it->second.count(*r.category)) out.push_back(&r);
    }
    std::sort(out.begin(), out.end(),
              [](const ManifestRecord* a, const ManifestRecord* b) { return a->id < b->id; });
    return out;
}

void parallel_for(int jobs, size_t n, const std::function<void(size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n); // stop handing out work
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    int count = std::min<int>(jobs, static_cast<int>(n));
    threads.reserve(static_cast<size_t>(count));
    for (int t = 0; t < count; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

AnnotationStore seed_store(const Manifest& manifest, const CharDict& dict,
                           const Projection& proj, const SeedOptions& opts) {
    std::vector<const ManifestRecord*> records;
    for (const auto& r : manifest.records())
        if (is_trainable(r, opts.plan, opts.periods)) records.push_back(&r);

    std::vector<std::vector<StoreItem>> staged(records.size());
    parallel_for(opts.jobs, records.size(), [&](size_t i) {
        const ManifestRecord& r = *records[i];
        auto cps = utf8::decode(*r.category);
        if (cps.size() != 1)
            fail(Errc::SchemaError, "category \"" + *r.category + "\" is not one character");
        const CharEntry& entry = dict.at(cps[0]);

        Glyph glyph = load_glyph(manifest, r, opts.threshold);
        MaskSet masks = segment_coarse(glyph, opts.merge_dist);
        ConfidenceDict seeded = seed_confidence(entry);
        for (size_t m = 0; m < masks.masks.size(); ++m) {
            StoreItem item;
            item.component_id = r.id + "#" + std::to_string(m);
            item.feature = embed(describe_normalized(masks.masks[m]), proj);
            item.dict = seeded;
            item.status = AnnotationStatus::Seeded;
            staged[i].push_back(std::move(item));
        }
    });

    AnnotationStore store;
    for (auto& items : staged)
        for (auto& item : items) store.put(std::move(item));
    return store;
}

namespace {

std::vector<std::string> label_masks(const MaskSet& set, const AnnotationStore& store,
                                     const Projection& proj, int k, WeightMode mode) {
    std::vector<std::string> labels;
    for (const auto& m : set.masks) {
        FeatureVec f = embed(describe_normalized(m), proj);
        labels.push_back(assign_label(refine_confidence(knn_query(f, store, k), mode)));
    }
    return labels;
}

} // namespace

FilterRecord run_filter(const Glyph& glyph, char32_t target, const CharDict& dict,
                        const AnnotationStore& store, const Projection& proj,
                        const FilterParams& params) {
    std::vector<LabeledMaskSet> sets;
    if (params.masks_dir) {
        std::filesystem::path file = *params.masks_dir / (glyph.id + ".json");
        if (std::filesystem::exists(file)) {
            LabeledMaskSet lms;
            lms.set = import_masks(glyph, file);
            sets.push_back(std::move(lms));
        }
    }
    {
        LabeledMaskSet lms;
        lms.set = segment_coarse(glyph, params.merge_dist);
        sets.push_back(std::move(lms));
    }
    {
        LabeledMaskSet lms;
        lms.set = segment_fine(glyph, params.max_piece_area);
        sets.push_back(std::move(lms));
    }
    for (auto& lms : sets) lms.labels = label_masks(lms.set, store, proj, params.k, params.mode);

    FilterOutcome outcome = filter_masksets(sets, target, dict);

    FilterRecord rec;
    rec.glyph_id = glyph.id;
    rec.period = glyph.period;
    rec.target = utf8::encode(target);
    rec.accepted = outcome.accepted;
    rec.tie = outcome.tie;
    rec.attempts = std::move(outcome.attempts);
    if (outcome.chosen_index) {
        rec.chosen_source = sets[*outcome.chosen_index].set.source;
        rec.chosen = std::move(sets[*outcome.chosen_index]);
    }
    return rec;
}

void save_filter_log(std::span<const FilterRecord> log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(Errc::IoError, "cannot write filter log " + path.string());
    for (const FilterRecord& rec : log) {
        nlohmann::json j;
        j["glyph_id"] = rec.glyph_id;
        j["period"] = std::string(period_name(rec.period));
        j["target"] = rec.target;
        j["accepted"] = rec.accepted;
        j["tie"] = rec.tie;
        if (rec.chosen_source) j["chosen_source"] = std::string(mask_source_name(*rec.chosen_source));
        else j["chosen_source"] = nullptr;
        auto masks = nlohmann::json::array();
        for (size_t i = 0; i < rec.chosen.set.masks.size(); ++i) {
            const ComponentMask& m = rec.chosen.set.masks[i];
            nlohmann::json e;
            e["rle"] = rle_encode(m.mask);
            e["bbox"] = {m.bbox.x0, m.bbox.y0, m.bbox.x1, m.bbox.y1};
            e["label"] = rec.chosen.labels[i];
            masks.push_back(std::move(e));
        }
        j["masks"] = std::move(masks);
        auto attempts = nlohmann::json::array();
        for (const FilterAttempt& a : rec.attempts) {
            nlohmann::json e;
            e["source"] = std::string(mask_source_name(a.source));
            e["labels"] = a.labels;
            e["verified"] = a.verified;
            attempts.push_back(std::move(e));
        }
        j["attempts"] = std::move(attempts);
        out << j.dump() << "\n";
    }
    if (!out) fail(Errc::IoError, "write failed for " + path.string());
}

std::vector<FilterRecord> load_filter_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::IoError, "cannot open filter log " + path.string());
    std::vector<FilterRecord> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            fail(Errc::SchemaError, "line " + std::to_string(line_no) + ": not a JSON object");
        FilterRecord rec;
        try {
            rec.glyph_id = j.at("glyph_id").get<std::string>();
            std::string period = j.at("period").get<std::string>();
            auto p = parse_period(period);
            if (!p)
                fail(Errc::SchemaError,
                     "line " + std::to_string(line_no) + ": unknown period \"" + period + "\"");
            rec.period = *p;
            rec.target = j.at("target").get<std::string>();
            rec.accepted = j.at("accepted").get<bool>();
            rec.tie = j.at("tie").get<bool>();
            if (!j.at("chosen_source").is_null()) {
                auto src = parse_mask_source(j.at("chosen_source").get<std::string>());
                if (!src)
                    fail(Errc::SchemaError,
                         "line " + std::to_string(line_no) + ": unknown mask source");
                rec.chosen_source = *src;
            }
            MaskSource source = rec.chosen_source.value_or(MaskSource::Coarse);
            rec.chosen.set.glyph_id = rec.glyph_id;
            rec.chosen.set.source = source;
            for (const auto& e : j.at("masks")) {
                auto runs = e.at("rle").get<std::vector<long long>>();
                rec.chosen.set.masks.push_back(
                    make_component(rle_decode(runs, kCanvas, kCanvas), source));
                rec.chosen.labels.push_back(e.at("label").get<std::string>());
            }
            for (const auto& e : j.at("attempts")) {
                FilterAttempt a;
                auto src = parse_mask_source(e.at("source").get<std::string>());
                if (!src)
                    fail(Errc::SchemaError,
                         "line " + std::to_string(line_no) + ": unknown mask source");
                a.source = *src;
                a.labels = e.at("labels").get<std::map<std::string, int>>();
                a.verified = e.at("verified").get<bool>();
                rec.attempts.push_back(std::move(a));
            }
        } catch (const nlohmann::json::exception& e) {
            fail(Errc::SchemaError, "line " + std::to_string(line_no) + ": " + e.what());
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<TokenSeq> predict_corpus(const Manifest& manifest,
                                     std::span<const ManifestRecord* const> records,
                                     const AnnotationStore& store, const Projection& proj,
                                     const PredictParams& params, int threshold, int jobs) {
    std::vector<TokenSeq> out(records.size());
    parallel_for(jobs, records.size(), [&](size_t i) {
        Glyph glyph = load_glyph(manifest, *records[i], threshold);
        out[i] = predict_knn_compose(glyph, store, proj, params);
    });
    std::sort(out.begin(), out.end(),
              [](const TokenSeq& a, const TokenSeq& b) { return a.glyph_id < b.glyph_id; });
    return out;
}

AugmentOutput write_augment_samples(std::span<const FilterRecord> log,
                                    const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    AugmentOutput out;
    for (const FilterRecord& rec : log) {
        if (!rec.accepted) continue;
        for (AugmentSample& s : augment_radicals(rec.glyph_id, rec.period, rec.chosen)) {
            std::string file = s.id + ".pgm";
            write_pgm(out_dir / file, s.mask);
            ManifestRecord row;
            row.id = s.id;
            row.period = s.period;
            row.category = s.label;
            row.image_path = file;
            out.rows.push_back(std::move(row));
            out.seqs.push_back(std::move(s.seq));
        }
    }
    return out;
}

SynthesisResult synthesize_corpus(const CharDict& dict, const std::filesystem::path& out_dir,
                                  const SynthesisSpec& spec) {
    if (spec.periods.empty()) fail(Errc::InvalidArgument, "no periods requested");
    if (spec.per_char < 1) fail(Errc::InvalidArgument, "per_char must be >= 1");

    std::filesystem::create_directories(out_dir / "images");
    std::set<std::string> labels = dict.radical_vocabulary();

    std::map<Period, RadicalAtlas> atlases;
    for (size_t pi = 0; pi < spec.periods.size(); ++pi) {
        Period period = spec.periods[pi];
        AtlasStyle style;
        style.style_seed = hash64(period_name(period)) ^ spec.seed;
        style.thickness = 2;
        style.dx = static_cast<int>(pi % 3) - 1;
        style.dy = static_cast<int>((pi / 3) % 3) - 1;
        style.ticks = static_cast<int>(pi % 3);
        RadicalAtlas atlas = make_synthetic_atlas(labels, spec.seed, style);
        save_atlas(atlas, out_dir / ("atlas-" + std::string(period_name(period))));
        atlases.emplace(period, std::move(atlas));
    }

    SynthesisResult result;
    std::vector<ManifestRecord> rows;
    for (const auto& [ch, entry] : dict.entries()) {
        for (Period period : spec.periods) {
            for (int k = 0; k < spec.per_char; ++k) {
                char buf[16];
                std::snprintf(buf, sizeof(buf), "%04X", static_cast<unsigned>(ch));
                std::string id = std::string(buf) + "-" + std::string(period_name(period)) + "-" +
                                 std::to_string(k);
                Bitmap bitmap = compose_synthetic(entry, atlases.at(period), spec.jitter,
                                                  hash64(id) ^ spec.seed);
                std::string file = "images/" + id + ".pgm";
                write_pgm(out_dir / file, bitmap);
                ManifestRecord row;
                row.id = id;
                row.period = period;
                row.category = utf8::encode(ch);
                row.image_path = file;
                rows.push_back(std::move(row));
                ++result.images;
            }
        }
    }
    result.manifest_path = out_dir / "manifest.jsonl";
    save_manifest(result.manifest_path, rows);
    return result;
}

PredictRunner make_knn_runner(const Manifest& manifest, const CharDict& dict,
                              const Projection& proj, const HoldoutPlan& plan, Period target,
                              const PredictParams& params, int threshold, int jobs) {
    return [&manifest, &dict, &proj, &plan, target, params, threshold,
            jobs](const std::set<Period>& subset) {
        SeedOptions seed_opts;
        seed_opts.merge_dist = params.merge_dist;
        seed_opts.threshold = threshold;
        seed_opts.plan = &plan;
        seed_opts.periods = &subset;
        seed_opts.jobs = jobs;
        AnnotationStore store = seed_store(manifest, dict, proj, seed_opts);
        auto records = test_records(manifest, plan, target);
        return predict_corpus(manifest, records, store, proj, params, threshold, jobs);
    };
}

} // namespace glyphid
