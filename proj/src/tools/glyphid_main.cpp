#include "glyphid/annotate.hpp"
#include "glyphid/embed.hpp"
#include "glyphid/errors.hpp"
#include "glyphid/evaluate.hpp"
#include "glyphid/glyph.hpp"
#include "glyphid/ids.hpp"
#include "glyphid/image_io.hpp"
#include "glyphid/pipeline.hpp"
#include "glyphid/predict.hpp"
#include "glyphid/reconstruct.hpp"
#include "glyphid/segment.hpp"
#include "glyphid/utf8.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

using namespace glyphid;

namespace {

const char* kVersionText =
    "glyphid 1.0.0\n"
    "file formats:\n"
    "  manifest        jsonl v1\n"
    "  char dict       tsv v1\n"
    "  mask set        json v1\n"
    "  projection      binary P3PROJ1\n"
    "  store           jsonl v1\n"
    "  predictions     jsonl v1\n"
    "  filter log      jsonl v1\n"
    "  holdout plan    json v1\n"
    "  loss curve      csv v1";

std::vector<std::string> period_choices() {
    std::vector<std::string> out;
    for (Period p : all_periods()) out.emplace_back(period_name(p));
    return out;
}

Period period_arg(const std::string& name) {
    auto p = parse_period(name);
    if (!p) fail(Errc::InvalidArgument, "unknown period \"" + name + "\"");
    return *p;
}

std::set<Period> period_set_arg(const std::vector<std::string>& names) {
    std::set<Period> out;
    for (const auto& n : names) out.insert(period_arg(n));
    return out;
}

WeightMode weight_arg(const std::string& name) {
    auto m = parse_weight_mode(name);
    if (!m) fail(Errc::InvalidArgument, "unknown weight mode \"" + name + "\"");
    return *m;
}

char32_t single_char_arg(const std::string& text, const char* what) {
    auto cps = utf8::decode(text);
    if (cps.size() != 1)
        fail(Errc::InvalidArgument, std::string(what) + " must be a single character");
    return cps[0];
}

CharDict load_dict_arg(const std::filesystem::path& path) {
    DictLoadResult r = load_dict(path);
    if (!r.rejects.empty())
        std::cerr << "note: skipped " << r.rejects.size() << " malformed dictionary line(s)\n";
    if (r.dict.size() == 0) fail(Errc::SchemaError, "dictionary has no usable entries");
    return std::move(r.dict);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) fail(Errc::IoError, "cannot write " + path.string());
    out << text;
    if (!out) fail(Errc::IoError, "write failed for " + path.string());
}

void print_tree(const IdsTree& t, int depth) {
    std::string pad(static_cast<size_t>(depth) * 2, ' ');
    if (t.is_leaf()) {
        std::cout << pad << t.label << "\n";
        return;
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "U+%04X", static_cast<unsigned>(t.op));
    std::cout << pad << utf8::encode(t.op) << "  " << buf << "\n";
    for (const auto& c : t.children) print_tree(c, depth + 1);
}

struct CommonKnn {
    int k = kDefaultKnnK;
    std::string weight = "inverse";
    double merge_dist = kDefaultMergeDist;
    long long max_piece_area = kDefaultMaxPieceArea;
    int threshold = kDefaultThreshold;
    int jobs = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--k", k, "neighbors per query")->capture_default_str();
        cmd->add_option("--weight", weight, "distance weighting")
            ->check(CLI::IsMember({"inverse", "literal", "neg"}))
            ->capture_default_str();
        cmd->add_option("--merge-dist", merge_dist, "coarse merge distance")
            ->capture_default_str();
        cmd->add_option("--max-piece-area", max_piece_area, "fine split threshold")
            ->capture_default_str();
        cmd->add_option("--threshold", threshold, "binarization threshold")
            ->capture_default_str();
        cmd->add_option("--jobs", jobs, "worker threads")->capture_default_str();
    }

    PredictParams predict_params() const {
        PredictParams p;
        p.merge_dist = merge_dist;
        p.max_piece_area = max_piece_area;
        p.k = k;
        p.mode = weight_arg(weight);
        return p;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"radical-level glyph decipherment pipeline"};
    app.set_version_flag("--version", kVersionText);
    app.set_config("--config", "", "TOML config; command-line flags win");
    app.require_subcommand(1);
    auto periods_ok = CLI::IsMember(period_choices());

    // ---- ids ------------------------------------------------------------
    auto* ids_cmd = app.add_subcommand("ids", "parse and print IDS expressions");
    ids_cmd->require_subcommand(1);
    auto* ids_parse = ids_cmd->add_subcommand("parse", "parse one expression");
    auto ids_expr = std::make_shared<std::string>();
    ids_parse->add_option("expr", *ids_expr, "IDS expression")->required();
    ids_parse->callback([ids_expr] {
        IdsTree tree = parse_ids(*ids_expr);
        print_tree(tree, 0);
        std::cout << "ids: " << serialize_ids(tree) << "\n";
        std::cout << "leaves: " << tree.leaf_count() << "\n";
    });

    // ---- stats ----------------------------------------------------------
    struct StatsOpts {
        std::string manifest;
        bool json = false;
    };
    auto stats_opts = std::make_shared<StatsOpts>();
    auto* stats_cmd = app.add_subcommand("stats", "per-period corpus counts");
    stats_cmd->add_option("--manifest", stats_opts->manifest, "corpus manifest")->required();
    stats_cmd->add_flag("--json", stats_opts->json, "emit JSON instead of TSV");
    stats_cmd->callback([stats_opts] {
        Manifest m = load_manifest(stats_opts->manifest);
        auto samples = m.samples_per_period();
        auto cats = m.categories_per_period();
        std::map<Period, long long> unlabeled;
        for (const auto& r : m.records())
            if (!r.category) ++unlabeled[r.period];
        if (stats_opts->json) {
            nlohmann::json j = nlohmann::json::object();
            for (const auto& [p, n] : samples) {
                nlohmann::json row;
                row["samples"] = n;
                row["categories"] = cats.count(p) ? cats[p].size() : 0;
                row["unlabeled"] = unlabeled.count(p) ? unlabeled[p] : 0;
                j[std::string(period_name(p))] = std::move(row);
            }
            std::cout << j.dump(2) << "\n";
        } else {
            std::cout << "period\tsamples\tcategories\tunlabeled\n";
            for (const auto& [p, n] : samples)
                std::cout << period_name(p) << "\t" << n << "\t"
                          << (cats.count(p) ? cats[p].size() : 0) << "\t"
                          << (unlabeled.count(p) ? unlabeled[p] : 0) << "\n";
        }
    });

    // ---- compose --------------------------------------------------------
    struct ComposeOpts {
        std::string dict, out;
        std::vector<std::string> periods;
        int per_char = 3;
        int jitter = 0;
        int inset = 2;
        uint64_t seed = 1;
    };
    auto compose_opts = std::make_shared<ComposeOpts>();
    auto* compose_cmd = app.add_subcommand("compose", "render a synthetic corpus");
    compose_cmd->add_option("--dict", compose_opts->dict, "character dictionary")->required();
    compose_cmd->add_option("--out", compose_opts->out, "output directory")->required();
    compose_cmd->add_option("--periods", compose_opts->periods, "periods to render")
        ->required()
        ->delimiter(',')
        ->check(periods_ok);
    compose_cmd->add_option("--per-char", compose_opts->per_char, "samples per character")
        ->capture_default_str();
    compose_cmd->add_option("--jitter", compose_opts->jitter, "max leaf placement offset")
        ->capture_default_str();
    compose_cmd->add_option("--inset", compose_opts->inset, "margin inside layout boxes")
        ->capture_default_str();
    compose_cmd->add_option("--seed", compose_opts->seed, "generator seed")
        ->capture_default_str();
    compose_cmd->callback([compose_opts] {
        CharDict dict = load_dict_arg(compose_opts->dict);
        SynthesisSpec spec;
        for (const auto& n : compose_opts->periods) spec.periods.push_back(period_arg(n));
        spec.per_char = compose_opts->per_char;
        spec.jitter.max_offset = compose_opts->jitter;
        spec.jitter.inset = compose_opts->inset;
        spec.seed = compose_opts->seed;
        SynthesisResult r = synthesize_corpus(dict, compose_opts->out, spec);
        std::cout << "manifest: " << r.manifest_path.string() << "\n";
        std::cout << "images: " << r.images << "\n";
    });

    // ---- segment ----------------------------------------------------------
    struct SegmentOpts {
        std::string in, id, out, masks;
        double merge_dist = kDefaultMergeDist;
        long long max_piece_area = kDefaultMaxPieceArea;
        int threshold = kDefaultThreshold;
        bool fine = false;
    };
    auto seg_opts = std::make_shared<SegmentOpts>();
    auto* seg_cmd = app.add_subcommand("segment", "split one glyph image into masks");
    seg_cmd->add_option("--in", seg_opts->in, "glyph image (PGM or PNG)")->required();
    seg_cmd->add_option("--id", seg_opts->id, "glyph id (default: file stem)");
    seg_cmd->add_option("--out", seg_opts->out, "mask set JSON to write");
    seg_cmd->add_option("--masks", seg_opts->masks, "external mask JSON to import");
    seg_cmd->add_option("--merge-dist", seg_opts->merge_dist, "coarse merge distance")
        ->capture_default_str();
    seg_cmd->add_option("--max-piece-area", seg_opts->max_piece_area, "fine split threshold")
        ->capture_default_str();
    seg_cmd->add_option("--threshold", seg_opts->threshold, "binarization threshold")
        ->capture_default_str();
    seg_cmd->add_flag("--fine", seg_opts->fine, "recursive min-ink splitting");
    seg_cmd->callback([seg_opts] {
        Glyph g;
        g.id = seg_opts->id.empty() ? std::filesystem::path(seg_opts->in).stem().string()
                                    : seg_opts->id;
        g.bitmap = normalize_raster(read_gray_image(seg_opts->in), seg_opts->threshold);
        MaskSet set;
        if (!seg_opts->masks.empty()) set = import_masks(g, seg_opts->masks);
        else if (seg_opts->fine) set = segment_fine(g, seg_opts->max_piece_area);
        else set = segment_coarse(g, seg_opts->merge_dist);
        std::cout << "source: " << mask_source_name(set.source) << "\n";
        std::cout << "masks: " << set.masks.size() << "\n";
        for (size_t i = 0; i < set.masks.size(); ++i) {
            const auto& m = set.masks[i];
            std::cout << i << "\tbbox " << m.bbox.x0 << "," << m.bbox.y0 << "," << m.bbox.x1
                      << "," << m.bbox.y1 << "\tarea " << m.area << "\n";
        }
        if (!seg_opts->out.empty()) save_maskset(set, seg_opts->out);
    });

    // ---- train-embed ------------------------------------------------------
    struct TrainOpts {
        std::string manifest, filter_log, out, curve;
        TrainOptions train;
        int threshold = kDefaultThreshold;
        bool no_augment = false;
    };
    auto train_opts = std::make_shared<TrainOpts>();
    auto* train_cmd = app.add_subcommand("train-embed", "fit the descriptor projection");
    auto* train_src_m =
        train_cmd->add_option("--manifest", train_opts->manifest,
                              "labeled corpus; each record is one radical sample");
    auto* train_src_f = train_cmd->add_option("--filter-log", train_opts->filter_log,
                                              "accepted masks from a reconstruction run");
    train_src_m->excludes(train_src_f);
    train_cmd->add_option("--out", train_opts->out, "projection checkpoint")->required();
    train_cmd->add_option("--curve", train_opts->curve, "loss curve CSV");
    train_cmd->add_option("--tau", train_opts->train.tau, "softmax temperature")
        ->capture_default_str();
    train_cmd->add_option("--epochs", train_opts->train.epochs, "training epochs")
        ->capture_default_str();
    train_cmd->add_option("--lr0", train_opts->train.lr0, "initial learning rate")
        ->capture_default_str();
    train_cmd->add_option("--lr1", train_opts->train.lr1, "final learning rate")
        ->capture_default_str();
    train_cmd->add_option("--jitter", train_opts->train.jitter, "augmentation offset range")
        ->capture_default_str();
    train_cmd->add_option("--seed", train_opts->train.seed, "shuffle seed")
        ->capture_default_str();
    train_cmd->add_option("--threshold", train_opts->threshold, "binarization threshold")
        ->capture_default_str();
    train_cmd->add_flag("--no-augment", train_opts->no_augment, "train on raw samples only");
    train_cmd->callback([train_opts] {
        std::vector<TrainSample> samples;
        if (!train_opts->manifest.empty()) {
            Manifest m = load_manifest(train_opts->manifest);
            for (const auto& r : m.records()) {
                if (!r.category) continue;
                samples.push_back({*r.category,
                                   load_glyph(m, r, train_opts->threshold).bitmap});
            }
        } else if (!train_opts->filter_log.empty()) {
            for (const auto& rec : load_filter_log(train_opts->filter_log)) {
                if (!rec.accepted) continue;
                for (size_t i = 0; i < rec.chosen.set.masks.size(); ++i)
                    samples.push_back({rec.chosen.labels[i], rec.chosen.set.masks[i].mask});
            }
        } else {
            fail(Errc::InvalidArgument, "need --manifest or --filter-log");
        }
        TrainOptions opts = train_opts->train;
        opts.augment = !train_opts->no_augment;
        TrainResult r = train_projection(samples, opts);
        save_projection(r.projection, train_opts->out);
        if (!train_opts->curve.empty()) save_loss_curve(r.loss_curve, train_opts->curve);
        std::cout << "samples: " << samples.size() << "\n";
        if (!r.loss_curve.empty()) {
            std::cout << "first loss: " << r.loss_curve.front() << "\n";
            std::cout << "final loss: " << r.loss_curve.back() << "\n";
        }
    });

    // ---- annotate -----------------------------------------------------------
    auto* annotate_cmd = app.add_subcommand("annotate", "build and refine the component store");
    annotate_cmd->require_subcommand(1);

    struct SeedOpts {
        std::string manifest, dict, proj, out, plan;
        std::vector<std::string> periods;
        double merge_dist = kDefaultMergeDist;
        int threshold = kDefaultThreshold;
        int jobs = 1;
    };
    auto seed_opts = std::make_shared<SeedOpts>();
    auto* seed_cmd =
        annotate_cmd->add_subcommand("seed", "segment deciphered glyphs into seeded items");
    seed_cmd->add_option("--manifest", seed_opts->manifest, "corpus manifest")->required();
    seed_cmd->add_option("--dict", seed_opts->dict, "character dictionary")->required();
    seed_cmd->add_option("--proj", seed_opts->proj, "projection checkpoint (default identity)");
    seed_cmd->add_option("--out", seed_opts->out, "store JSONL to write")->required();
    seed_cmd->add_option("--plan", seed_opts->plan, "holdout plan; only train categories seed");
    seed_cmd->add_option("--periods", seed_opts->periods, "restrict to these periods")
        ->delimiter(',')
        ->check(periods_ok);
    seed_cmd->add_option("--merge-dist", seed_opts->merge_dist, "coarse merge distance")
        ->capture_default_str();
    seed_cmd->add_option("--threshold", seed_opts->threshold, "binarization threshold")
        ->capture_default_str();
    seed_cmd->add_option("--jobs", seed_opts->jobs, "worker threads")->capture_default_str();
    seed_cmd->callback([seed_opts] {
        Manifest m = load_manifest(seed_opts->manifest);
        CharDict dict = load_dict_arg(seed_opts->dict);
        Projection proj = seed_opts->proj.empty() ? Projection::identity()
                                                  : load_projection(seed_opts->proj);
        std::optional<HoldoutPlan> plan;
        if (!seed_opts->plan.empty()) plan = load_holdout(seed_opts->plan);
        std::optional<std::set<Period>> periods;
        if (!seed_opts->periods.empty()) periods = period_set_arg(seed_opts->periods);
        SeedOptions so;
        so.merge_dist = seed_opts->merge_dist;
        so.threshold = seed_opts->threshold;
        so.plan = plan ? &*plan : nullptr;
        so.periods = periods ? &*periods : nullptr;
        so.jobs = seed_opts->jobs;
        AnnotationStore store = seed_store(m, dict, proj, so);
        save_store(store, seed_opts->out);
        std::cout << "items: " << store.size() << "\n";
    });

    struct PropOpts {
        std::string store, out;
        int k = kDefaultKnnK;
        std::string weight = "inverse";
        bool chain = false;
    };
    auto prop_opts = std::make_shared<PropOpts>();
    auto* prop_cmd =
        annotate_cmd->add_subcommand("propagate", "label unlabeled items from neighbors");
    prop_cmd->add_option("--store", prop_opts->store, "store JSONL to read")->required();
    prop_cmd->add_option("--out", prop_opts->out, "store JSONL to write")->required();
    prop_cmd->add_option("--k", prop_opts->k, "neighbors per query")->capture_default_str();
    prop_cmd->add_option("--weight", prop_opts->weight, "distance weighting")
        ->check(CLI::IsMember({"inverse", "literal", "neg"}))
        ->capture_default_str();
    prop_cmd->add_flag("--chain", prop_opts->chain,
                       "freshly labeled items immediately join the pool");
    prop_cmd->callback([prop_opts] {
        AnnotationStore store = load_store(prop_opts->store);
        PropagateOptions po;
        po.k = prop_opts->k;
        po.mode = weight_arg(prop_opts->weight);
        po.chain = prop_opts->chain;
        int n = propagate(store, po);
        save_store(store, prop_opts->out);
        std::cout << "propagated: " << n << "\n";
    });

    // ---- reconstruct ----------------------------------------------------------
    auto* recon_cmd = app.add_subcommand("reconstruct", "match components against the dictionary");
    recon_cmd->require_subcommand(1);

    struct QueryOpts {
        std::string dict, ids, target, id = "query";
        std::vector<std::string> labels;
        double fuzz = kDefaultFuzz;
    };
    auto query_opts = std::make_shared<QueryOpts>();
    auto* query_cmd = recon_cmd->add_subcommand("query", "rank characters for one query");
    query_cmd->add_option("--dict", query_opts->dict, "character dictionary")->required();
    auto* q_ids = query_cmd->add_option("--ids", query_opts->ids, "IDS expression query");
    auto* q_labels = query_cmd->add_option("--labels", query_opts->labels,
                                           "radical multiset query")
                         ->delimiter(',');
    q_ids->excludes(q_labels);
    query_cmd->add_option("--fuzz", query_opts->fuzz, "max normalized edit distance")
        ->capture_default_str();
    query_cmd->add_option("--target", query_opts->target, "expected character");
    query_cmd->add_option("--id", query_opts->id, "query id for the output line")
        ->capture_default_str();
    query_cmd->callback([query_opts] {
        CharDict dict = load_dict_arg(query_opts->dict);
        QueryForm q;
        if (!query_opts->ids.empty()) {
            q = QueryForm::from_ids(query_opts->ids);
        } else if (!query_opts->labels.empty()) {
            std::map<std::string, int> multiset;
            for (const auto& l : query_opts->labels) ++multiset[l];
            q = QueryForm::from_multiset(std::move(multiset));
        } else {
            fail(Errc::InvalidArgument, "need --ids or --labels");
        }
        std::optional<char32_t> target;
        if (!query_opts->target.empty())
            target = single_char_arg(query_opts->target, "--target");
        ReconstructionResult r = match_sequence(q, dict, query_opts->fuzz, target);
        std::cout << candidates_line(query_opts->id, r) << "\n";
    });

    struct FilterOpts {
        std::string manifest, dict, store, proj, out, plan, masks_dir;
        std::vector<std::string> periods;
        CommonKnn knn;
    };
    auto filter_opts = std::make_shared<FilterOpts>();
    auto* filter_cmd =
        recon_cmd->add_subcommand("filter", "keep segmentations that rebuild their character");
    filter_cmd->add_option("--manifest", filter_opts->manifest, "corpus manifest")->required();
    filter_cmd->add_option("--dict", filter_opts->dict, "character dictionary")->required();
    filter_cmd->add_option("--store", filter_opts->store, "labeled component store")->required();
    filter_cmd->add_option("--proj", filter_opts->proj,
                           "projection checkpoint (default identity)");
    filter_cmd->add_option("--out", filter_opts->out, "filter log JSONL")->required();
    filter_cmd->add_option("--plan", filter_opts->plan,
                           "holdout plan; only train categories are filtered");
    filter_cmd->add_option("--periods", filter_opts->periods, "restrict to these periods")
        ->delimiter(',')
        ->check(periods_ok);
    filter_cmd->add_option("--masks-dir", filter_opts->masks_dir,
                           "directory of <glyph_id>.json mask sets to import");
    filter_opts->knn.attach(filter_cmd);
    filter_cmd->callback([filter_opts] {
        Manifest m = load_manifest(filter_opts->manifest);
        CharDict dict = load_dict_arg(filter_opts->dict);
        AnnotationStore store = load_store(filter_opts->store);
        Projection proj = filter_opts->proj.empty() ? Projection::identity()
                                                    : load_projection(filter_opts->proj);
        std::optional<HoldoutPlan> plan;
        if (!filter_opts->plan.empty()) plan = load_holdout(filter_opts->plan);
        std::optional<std::set<Period>> periods;
        if (!filter_opts->periods.empty()) periods = period_set_arg(filter_opts->periods);

        FilterParams params;
        params.merge_dist = filter_opts->knn.merge_dist;
        params.max_piece_area = filter_opts->knn.max_piece_area;
        params.k = filter_opts->knn.k;
        params.mode = weight_arg(filter_opts->knn.weight);
        if (!filter_opts->masks_dir.empty()) params.masks_dir = filter_opts->masks_dir;

        std::vector<const ManifestRecord*> records;
        for (const auto& r : m.records())
            if (is_trainable(r, plan ? &*plan : nullptr, periods ? &*periods : nullptr))
                records.push_back(&r);
        std::sort(records.begin(), records.end(),
                  [](const ManifestRecord* a, const ManifestRecord* b) { return a->id < b->id; });

        std::vector<FilterRecord> log(records.size());
        parallel_for(filter_opts->knn.jobs, records.size(), [&](size_t i) {
            const ManifestRecord& r = *records[i];
            Glyph glyph = load_glyph(m, r, filter_opts->knn.threshold);
            char32_t target = single_char_arg(*r.category, "category");
            log[i] = run_filter(glyph, target, dict, store, proj, params);
        });
        save_filter_log(log, filter_opts->out);
        long long accepted = 0, ties = 0;
        for (const auto& rec : log) {
            accepted += rec.accepted ? 1 : 0;
            ties += rec.tie ? 1 : 0;
        }
        std::cout << "glyphs: " << log.size() << "\n";
        std::cout << "accepted: " << accepted << "\n";
        std::cout << "ties: " << ties << "\n";
    });

    // ---- predict ------------------------------------------------------------
    struct PredictOpts {
        std::string manifest, store, proj, plan, out, period;
        CommonKnn knn;
    };
    auto pred_opts = std::make_shared<PredictOpts>();
    auto* pred_cmd = app.add_subcommand("predict", "token sequences for held-out glyphs");
    pred_cmd->add_option("--manifest", pred_opts->manifest, "corpus manifest")->required();
    pred_cmd->add_option("--store", pred_opts->store, "labeled component store")->required();
    pred_cmd->add_option("--proj", pred_opts->proj, "projection checkpoint (default identity)");
    pred_cmd->add_option("--plan", pred_opts->plan, "holdout plan")->required();
    pred_cmd->add_option("--out", pred_opts->out, "predictions JSONL")->required();
    pred_cmd->add_option("--period", pred_opts->period, "restrict to one period")
        ->check(periods_ok);
    pred_opts->knn.attach(pred_cmd);
    pred_cmd->callback([pred_opts] {
        Manifest m = load_manifest(pred_opts->manifest);
        AnnotationStore store = load_store(pred_opts->store);
        Projection proj = pred_opts->proj.empty() ? Projection::identity()
                                                  : load_projection(pred_opts->proj);
        HoldoutPlan plan = load_holdout(pred_opts->plan);
        std::optional<Period> period;
        if (!pred_opts->period.empty()) period = period_arg(pred_opts->period);
        auto records = test_records(m, plan, period);
        auto seqs = predict_corpus(m, records, store, proj, pred_opts->knn.predict_params(),
                                   pred_opts->knn.threshold, pred_opts->knn.jobs);
        save_predictions(seqs, pred_opts->out);
        std::cout << "predictions: " << seqs.size() << "\n";
    });

    // ---- augment ------------------------------------------------------------
    struct AugmentOpts {
        std::string filter_log, out;
    };
    auto aug_opts = std::make_shared<AugmentOpts>();
    auto* aug_cmd =
        app.add_subcommand("augment", "emit accepted components as single-radical samples");
    aug_cmd->add_option("--filter-log", aug_opts->filter_log, "reconstruction filter log")
        ->required();
    aug_cmd->add_option("--out", aug_opts->out, "output directory")->required();
    aug_cmd->callback([aug_opts] {
        auto log = load_filter_log(aug_opts->filter_log);
        AugmentOutput out = write_augment_samples(log, aug_opts->out);
        std::filesystem::path dir(aug_opts->out);
        save_manifest(dir / "manifest.jsonl", out.rows);
        save_predictions(out.seqs, dir / "seqs.jsonl");
        std::cout << "samples: " << out.rows.size() << "\n";
    });

    // ---- holdout ------------------------------------------------------------
    struct HoldoutOpts {
        std::string manifest, out;
        int n = 0;
        uint64_t seed = 1;
    };
    auto hold_opts = std::make_shared<HoldoutOpts>();
    auto* hold_cmd = app.add_subcommand("holdout", "draw undeciphered target categories");
    hold_cmd->add_option("--manifest", hold_opts->manifest, "corpus manifest")->required();
    hold_cmd->add_option("--n", hold_opts->n, "categories to hold out")->required();
    hold_cmd->add_option("--seed", hold_opts->seed, "draw seed")->capture_default_str();
    hold_cmd->add_option("--out", hold_opts->out, "plan JSON")->required();
    hold_cmd->callback([hold_opts] {
        Manifest m = load_manifest(hold_opts->manifest);
        HoldoutPlan plan = build_holdout(m, hold_opts->n, hold_opts->seed);
        save_holdout(plan, hold_opts->out);
        std::cout << "source: " << period_name(plan.source) << "\n";
        for (const auto& [p, cats] : plan.undeciphered)
            std::cout << period_name(p) << ": " << cats.size() << " held out\n";
    });

    // ---- score --------------------------------------------------------------
    struct ScoreOpts2 {
        std::string pred, plan, manifest, dict, out;
        double fuzz = kDefaultFuzz;
        int topk = 1;
        bool tsv = false;
    };
    auto score_opts = std::make_shared<ScoreOpts2>();
    auto* score_cmd = app.add_subcommand("score", "per-period decipherment report");
    score_cmd->add_option("--pred", score_opts->pred, "predictions JSONL")->required();
    score_cmd->add_option("--plan", score_opts->plan, "holdout plan")->required();
    score_cmd->add_option("--manifest", score_opts->manifest, "corpus manifest")->required();
    score_cmd->add_option("--dict", score_opts->dict, "character dictionary")->required();
    score_cmd->add_option("--fuzz", score_opts->fuzz, "max normalized edit distance")
        ->capture_default_str();
    score_cmd->add_option("--topk", score_opts->topk, "report ranks 1..k")
        ->capture_default_str();
    score_cmd->add_option("--out", score_opts->out, "also write the report here");
    score_cmd->add_flag("--tsv", score_opts->tsv, "emit TSV instead of JSON");
    score_cmd->callback([score_opts] {
        Manifest m = load_manifest(score_opts->manifest);
        CharDict dict = load_dict_arg(score_opts->dict);
        HoldoutPlan plan = load_holdout(score_opts->plan);
        auto preds = import_predictions(score_opts->pred, dict.radical_vocabulary());
        ScoreOptions so;
        so.fuzz = score_opts->fuzz;
        so.topk = score_opts->topk;
        DecipherReport report = score(preds, m, dict, plan, so);
        std::string text = score_opts->tsv ? report_tsv(report) : report_json(report);
        std::cout << text;
        if (!score_opts->out.empty()) write_text(score_opts->out, text);
    });

    // ---- ablate ---------------------------------------------------------------
    struct AblateOpts {
        std::string manifest, dict, plan, proj, target, subsets, out;
        double fuzz = kDefaultFuzz;
        int topk = 1;
        bool tsv = false;
        CommonKnn knn;
    };
    auto abl_opts = std::make_shared<AblateOpts>();
    auto* abl_cmd = app.add_subcommand("ablate", "score the target period per training subset");
    abl_cmd->add_option("--manifest", abl_opts->manifest, "corpus manifest")->required();
    abl_cmd->add_option("--dict", abl_opts->dict, "character dictionary")->required();
    abl_cmd->add_option("--plan", abl_opts->plan, "holdout plan")->required();
    abl_cmd->add_option("--proj", abl_opts->proj, "projection checkpoint (default identity)");
    abl_cmd->add_option("--target", abl_opts->target, "period under evaluation")
        ->required()
        ->check(periods_ok);
    abl_cmd->add_option("--subsets", abl_opts->subsets,
                        "semicolon-separated period lists (default: grow from target)");
    abl_cmd->add_option("--fuzz", abl_opts->fuzz, "max normalized edit distance")
        ->capture_default_str();
    abl_cmd->add_option("--topk", abl_opts->topk, "report ranks 1..k")->capture_default_str();
    abl_cmd->add_option("--out", abl_opts->out, "also write the matrix here");
    abl_cmd->add_flag("--tsv", abl_opts->tsv, "emit TSV instead of JSON");
    abl_opts->knn.attach(abl_cmd);
    abl_cmd->callback([abl_opts] {
        Manifest m = load_manifest(abl_opts->manifest);
        CharDict dict = load_dict_arg(abl_opts->dict);
        HoldoutPlan plan = load_holdout(abl_opts->plan);
        Projection proj = abl_opts->proj.empty() ? Projection::identity()
                                                 : load_projection(abl_opts->proj);
        Period target = period_arg(abl_opts->target);

        std::vector<std::set<Period>> subsets;
        if (!abl_opts->subsets.empty()) {
            std::stringstream ss(abl_opts->subsets);
            std::string group;
            while (std::getline(ss, group, ';')) {
                std::set<Period> subset;
                std::stringstream gs(group);
                std::string name;
                while (std::getline(gs, name, ',')) subset.insert(period_arg(name));
                if (!subset.empty()) subsets.push_back(std::move(subset));
            }
        } else {
            // Grow era by era from the target alone to every period on file.
            std::set<Period> acc{target};
            subsets.push_back(acc);
            for (const auto& [p, n] : m.samples_per_period()) {
                if (p == target || n == 0) continue;
                acc.insert(p);
                subsets.push_back(acc);
            }
        }

        PredictRunner runner =
            make_knn_runner(m, dict, proj, plan, target, abl_opts->knn.predict_params(),
                            abl_opts->knn.threshold, abl_opts->knn.jobs);
        ScoreOptions so;
        so.fuzz = abl_opts->fuzz;
        so.topk = abl_opts->topk;
        auto rows = ablation_matrix(m, dict, plan, target, subsets, runner, so);
        std::string text = abl_opts->tsv ? ablation_tsv(rows, target) : ablation_json(rows, target);
        std::cout << text;
        if (!abl_opts->out.empty()) write_text(abl_opts->out, text);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
