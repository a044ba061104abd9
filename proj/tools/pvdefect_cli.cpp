#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pvdefect/pvdefect.hpp"

namespace fs = std::filesystem;
using namespace pvdefect;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    int jobs = 1;
    bool verbose = false;
};

void info(const Globals& g, const std::string& msg) {
    if (g.verbose) std::cerr << msg << '\n';
}

/// Writes to `path`, or to standard output when it is "-" or empty.
void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") std::cout << text << std::flush;
    else write_text_file(path, text);
}

struct SourceArgs {
    std::vector<std::string> features;
    std::string embeddings;

    void add_to(CLI::App* app) {
        app->add_option("--features", features, "Feature store (PVFS); repeatable")->check(CLI::ExistingFile);
        app->add_option("--embeddings", embeddings, "Embedding file (PVEM) providing DEEP")->check(CLI::ExistingFile);
    }
    std::vector<FeatureTable> load() const {
        std::vector<FeatureTable> out;
        for (const auto& f : features) out.push_back(load_feature_store(f));
        if (!embeddings.empty()) out.push_back(table_from_embeddings(load_embeddings(embeddings)));
        require(!out.empty(), Errc::MissingFeatures, "give at least one --features or --embeddings source");
        return out;
    }
};

std::vector<const FeatureTable*> pointers(const std::vector<FeatureTable>& t) {
    std::vector<const FeatureTable*> p;
    for (const auto& x : t) p.push_back(&x);
    return p;
}

struct ExtractArgs {
    HandcraftedConfig hc;
    PreprocessConfig pre;
    bool preprocess = false;

    void add_to(CLI::App* app) {
        app->add_flag("--preprocess", preprocess, "Run the enhancement pipeline before extraction");
        app->add_option("--size", pre.target_width, "Preprocessing output size (square)");
        app->add_option("--gamma", pre.gamma, "Preprocessing gamma");
        app->add_option("--clahe-clip", pre.clahe_clip, "CLAHE clip limit");
        app->add_flag("--no-clahe{false}", pre.enable_clahe, "Skip the CLAHE stage");
        app->add_flag("--no-gamma{false}", pre.enable_gamma, "Skip the gamma stage");
        app->add_option("--hog-input", hc.hog_input, "HOG internal resize (0 keeps native size)");
        app->add_option("--gabor-input", hc.gabor_input, "Gabor internal resize (0 keeps native size)");
        app->add_flag("--lbp-interpolate", hc.lbp_interpolate, "Bilinear LBP neighbour sampling");
    }
    std::optional<PreprocessConfig> preprocessing() const {
        if (!preprocess) return std::nullopt;
        PreprocessConfig p = pre;
        p.target_height = p.target_width;
        p.validate();
        return p;
    }
    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["preprocess"] = preprocess;
        if (preprocess) {
            j["size"] = pre.target_width;
            j["gamma"] = pre.gamma;
            j["clahe_clip"] = pre.clahe_clip;
            j["clahe"] = pre.enable_clahe;
            j["gamma_stage"] = pre.enable_gamma;
        }
        j["hog_input"] = hc.hog_input;
        j["gabor_input"] = hc.gabor_input;
        j["lbp_interpolate"] = hc.lbp_interpolate;
        return j;
    }
};

struct ParamArgs {
    TrainParams p;
    std::string kernel = "rbf";
    double gamma = 0;

    void add_to(CLI::App* app) {
        app->add_option("--C", p.svm.C, "SVM box constraint");
        app->add_option("--kernel", kernel, "SVM kernel")->check(CLI::IsMember({"rbf", "linear"}));
        app->add_option("--svm-gamma", gamma, "RBF gamma (default 1 / (dim * variance))");
        app->add_option("--rounds", p.gbdt.rounds, "GBDT boosting rounds");
        app->add_option("--eta", p.gbdt.eta, "GBDT learning rate");
        app->add_option("--max-depth", p.gbdt.max_depth, "Level-wise tree depth");
        app->add_option("--max-leaves", p.gbdt.max_leaves, "Leaf-wise leaf budget");
        app->add_option("--min-samples-leaf", p.gbdt.min_samples_leaf, "Minimum samples per leaf");
        app->add_option("--bins", p.gbdt.bins, "Histogram bins per feature");
    }
    TrainParams get() const {
        TrainParams out = p;
        out.svm.kernel = kernel == "linear" ? KernelType::Linear : KernelType::Rbf;
        if (gamma > 0) out.svm.gamma = gamma;
        return out;
    }
};

std::vector<std::string> ids_in(const LabeledDataset& ds, std::optional<Split> split) {
    std::vector<std::string> ids;
    if (split) {
        for (const auto* e : ds.select(*split)) ids.push_back(e->id);
    } else {
        for (const auto& e : ds.entries()) ids.push_back(e.id);
    }
    return ids;
}

std::optional<Split> parse_split_arg(const std::string& s) {
    if (s == "all") return std::nullopt;
    return parse_split(s);
}

std::string format_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
    CLI::App app{"Solar panel defect classification with fused handcrafted and deep features", "pvdefect"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Seed for every random draw")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_flag("-v,--verbose", g.verbose, "Log progress to standard error");
    std::function<void()> action;

    // ingest ---------------------------------------------------------------
    auto* ingest = app.add_subcommand("ingest", "Build a manifest from one directory per class");
    std::string in_root, in_out;
    ingest->add_option("--root", in_root, "Dataset root")->required()->check(CLI::ExistingDirectory);
    ingest->add_option("--out", in_out, "Manifest to write")->required();
    ingest->callback([&] {
        action = [&] {
            std::vector<std::string> skipped;
            const auto ds = ingest_directory(in_root, &skipped);
            for (const auto& s : skipped) std::cerr << "skipped " << s << '\n';
            require(!ds.empty(), Errc::EmptyDataset, "no PNG/PGM/PPM images under " + in_root);
            save_manifest(ds, in_out);
            const auto counts = ds.class_counts();
            for (int c = 0; c < kNumClasses; ++c)
                std::cout << label_name(label_from_code(c)) << ',' << counts[c] << '\n';
        };
    });

    // augment --------------------------------------------------------------
    auto* augment = app.add_subcommand("augment", "Add a rotated, a flipped and a shifted child per original");
    std::string au_in, au_out, au_fill = "reflect";
    AugmentConfig au_cfg;
    augment->add_option("--manifest", au_in, "Input manifest")->required()->check(CLI::ExistingFile);
    augment->add_option("--out", au_out, "Output manifest")->required();
    augment->add_option("--max-shift", au_cfg.max_translate_frac, "Largest shift as a fraction of the image side");
    augment->add_option("--fill", au_fill, "Border fill for shifts")->check(CLI::IsMember({"reflect", "replicate", "zero"}));
    augment->callback([&] {
        action = [&] {
            au_cfg.seed = g.seed;
            au_cfg.translate_fill = au_fill == "zero"        ? FillPolicy::Zero
                                    : au_fill == "replicate" ? FillPolicy::Replicate
                                                             : FillPolicy::Reflect;
            const auto out = augment_dataset(load_manifest(au_in), au_cfg);
            save_manifest(out, au_out);
            std::cout << out.size() << " entries\n";
        };
    });

    // split ----------------------------------------------------------------
    auto* split = app.add_subcommand("split", "Tag a stratified, lineage-preserving train/test split");
    std::string sp_in, sp_out;
    double sp_frac = 0.2;
    split->add_option("--manifest", sp_in, "Input manifest")->required()->check(CLI::ExistingFile);
    split->add_option("--out", sp_out, "Output manifest")->required();
    split->add_option("--test-frac", sp_frac, "Test fraction per class")->capture_default_str();
    split->callback([&] {
        action = [&] {
            const auto out = stratified_split(load_manifest(sp_in), sp_frac, g.seed);
            save_manifest(out, sp_out);
            std::cout << "train," << out.select(Split::Train).size() << "\ntest," << out.select(Split::Test).size()
                      << '\n';
        };
    });

    // preprocess -----------------------------------------------------------
    auto* prep = app.add_subcommand("preprocess", "Write enhanced copies of every manifest image");
    std::string pp_in, pp_root, pp_dir, pp_out;
    PreprocessConfig pp_cfg;
    prep->add_option("--manifest", pp_in, "Input manifest")->required()->check(CLI::ExistingFile);
    prep->add_option("--root", pp_root, "Directory that relative image paths resolve against");
    prep->add_option("--out-dir", pp_dir, "Directory for the enhanced PNGs")->required();
    prep->add_option("--out", pp_out, "Manifest pointing at the enhanced images")->required();
    prep->add_option("--size", pp_cfg.target_width, "Output size (square)")->capture_default_str();
    prep->add_option("--gamma", pp_cfg.gamma, "Gamma")->capture_default_str();
    prep->add_option("--clahe-clip", pp_cfg.clahe_clip, "CLAHE clip limit")->capture_default_str();
    prep->add_option("--bilateral-d", pp_cfg.bilateral_d, "Bilateral diameter")->capture_default_str();
    prep->add_option("--nlm-h", pp_cfg.nlm_h, "NLM luminance strength")->capture_default_str();
    prep->add_flag("--no-clahe{false}", pp_cfg.enable_clahe, "Skip the CLAHE stage");
    prep->add_flag("--no-gamma{false}", pp_cfg.enable_gamma, "Skip the gamma stage");
    prep->callback([&] {
        action = [&] {
            pp_cfg.target_height = pp_cfg.target_width;
            pp_cfg.validate();
            const auto ds = load_manifest(pp_in);
            const auto source = file_image_source(pp_root);
            std::vector<DatasetEntry> out(ds.entries());
            parallel_for(ds.size(), g.jobs, [&](std::size_t i) {
                const auto& e = ds[i];
                try {
                    const fs::path dst = fs::path(pp_dir) / (e.id + ".png");
                    fs::create_directories(dst.parent_path());
                    save_image(preprocess_pipeline(source(e), pp_cfg), dst);
                    out[i].path = dst.string();
                    out[i].transform.clear();
                } catch (const Error& err) {
                    throw Error(err.code(), e.id + ": " + err.what());
                }
            });
            save_manifest(LabeledDataset(std::move(out)), pp_out);
        };
    });

    // extract --------------------------------------------------------------
    auto* extract = app.add_subcommand("extract", "Compute handcrafted blocks into a feature store");
    std::string ex_in, ex_root, ex_out, ex_blocks = "LBP+HOG+GABOR";
    ExtractArgs ex_args;
    extract->add_option("--manifest", ex_in, "Manifest")->required()->check(CLI::ExistingFile);
    extract->add_option("--root", ex_root, "Directory that relative image paths resolve against");
    extract->add_option("--blocks", ex_blocks, "Blocks, e.g. LBP+GABOR")->capture_default_str();
    extract->add_option("--out", ex_out, "Feature store to write")->required();
    ex_args.add_to(extract);
    extract->callback([&] {
        action = [&] {
            const auto ds = load_manifest(ex_in);
            const auto t = extract_feature_table(ds, parse_combo(ex_blocks), ex_args.hc, file_image_source(ex_root),
                                                 g.jobs, ex_args.preprocessing());
            save_feature_store(t, ex_out);
            std::cout << t.size() << " samples, " << t.signature().to_string() << '\n';
        };
    });

    // synth-images ---------------------------------------------------------
    auto* synth_img = app.add_subcommand("synth-images", "Write procedural panel textures and their manifest");
    std::string si_dir;
    int si_per_class = 20, si_size = 64;
    synth_img->add_option("--out-dir", si_dir, "Output directory")->required();
    synth_img->add_option("--per-class", si_per_class, "Images per class")->capture_default_str();
    synth_img->add_option("--size", si_size, "Image side in pixels")->capture_default_str();
    synth_img->callback([&] {
        action = [&] {
            const auto ds = synth_manifest(si_per_class);
            parallel_for(ds.size(), g.jobs, [&](std::size_t i) {
                const fs::path dst = fs::path(si_dir) / ds[i].path;
                fs::create_directories(dst.parent_path());
                save_image(synth_panel(ds[i].label, g.seed, ds[i].id, si_size), dst);
            });
            save_manifest(ds, fs::path(si_dir) / "manifest.jsonl");
            std::cout << ds.size() << " images\n";
        };
    });

    // synth-embed ----------------------------------------------------------
    auto* synth_emb = app.add_subcommand("synth-embed", "Write class-separated Gaussian embeddings for a manifest");
    std::string se_in, se_out;
    std::uint32_t se_dim = 1664;
    double se_sep = 6.0;
    synth_emb->add_option("--manifest", se_in, "Manifest")->required()->check(CLI::ExistingFile);
    synth_emb->add_option("--out", se_out, "Embedding file to write")->required();
    synth_emb->add_option("--dim", se_dim, "Embedding dimension")->capture_default_str();
    synth_emb->add_option("--separation", se_sep, "Distance of each class mean from the origin")->capture_default_str();
    synth_emb->callback([&] {
        action = [&] {
            const auto ds = load_manifest(se_in);
            std::map<std::string, ClassLabel> labels;
            for (const auto& e : ds.entries()) labels[e.id] = e.label;
            write_embeddings(synthetic_embeddings(labels, se_dim, g.seed, se_sep), se_out);
        };
    });

    // fuse -----------------------------------------------------------------
    auto* fuse = app.add_subcommand("fuse", "Concatenate selected blocks into one feature store");
    SourceArgs fu_src;
    std::string fu_combo, fu_manifest, fu_out;
    fu_src.add_to(fuse);
    fuse->add_option("--combo", fu_combo, "Blocks to keep, e.g. DEEP+GABOR")->required();
    fuse->add_option("--manifest", fu_manifest, "Restrict and order rows by this manifest")->check(CLI::ExistingFile);
    fuse->add_option("--out", fu_out, "Feature store to write")->required();
    fuse->callback([&] {
        action = [&] {
            const auto sources = fu_src.load();
            const auto ids = fu_manifest.empty() ? sources.front().ids() : ids_in(load_manifest(fu_manifest), std::nullopt);
            const auto t = assemble_features(ids, parse_combo(fu_combo), pointers(sources));
            save_feature_store(t, fu_out);
            std::cout << t.size() << " samples, " << t.signature().to_string() << '\n';
        };
    });

    // train ----------------------------------------------------------------
    auto* train = app.add_subcommand("train", "Fit a classifier on the train split");
    SourceArgs tr_src;
    ParamArgs tr_params;
    ExtractArgs tr_extract;
    std::string tr_manifest, tr_combo, tr_clf = "svm", tr_out, tr_split = "train";
    bool tr_raw = false;
    tr_src.add_to(train);
    tr_params.add_to(train);
    tr_extract.add_to(train);
    train->add_option("--manifest", tr_manifest, "Manifest with labels and split tags")->required()->check(CLI::ExistingFile);
    train->add_option("--combo", tr_combo, "Feature combination, e.g. DEEP+GABOR")->required();
    train->add_option("--classifier", tr_clf, "svm, gbdt-levelwise or gbdt-leafwise")->capture_default_str();
    train->add_option("--split", tr_split, "Rows to train on: train, test or all")->capture_default_str();
    train->add_flag("--no-standardize", tr_raw, "Skip per-dimension z-scoring");
    train->add_option("--out", tr_out, "Model file to write")->required();
    train->callback([&] {
        action = [&] {
            const auto ds = load_manifest(tr_manifest);
            const auto sources = tr_src.load();
            const auto ids = ids_in(ds, parse_split_arg(tr_split));
            const auto t = assemble_features(ids, parse_combo(tr_combo), pointers(sources));
            std::vector<ClassLabel> y;
            for (const auto& id : ids) y.push_back(ds.find(id)->label);
            const auto clf = parse_classifier(tr_clf);
            auto model = train_model(clf, t.values(), y, t.signature(), tr_params.get(), !tr_raw);
            nlohmann::ordered_json meta;
            meta["combo"] = combo_name(t.signature().kinds());
            meta["classifier"] = std::string(classifier_name(clf));
            meta["train_samples"] = ids.size();
            meta["extraction"] = tr_extract.to_json();
            model.metadata = meta.dump();
            save_model(model, tr_out);
            info(g, "trained " + meta.dump());
        };
    });

    // predict --------------------------------------------------------------
    auto* pred = app.add_subcommand("predict", "Label one image or every entry of a manifest");
    std::string pr_model, pr_image, pr_manifest, pr_root, pr_emb, pr_id;
    pred->add_option("--model", pr_model, "Model file")->required()->check(CLI::ExistingFile);
    auto* img_opt = pred->add_option("--image", pr_image, "Image to label")->check(CLI::ExistingFile);
    auto* man_opt = pred->add_option("--manifest", pr_manifest, "Manifest to label")->check(CLI::ExistingFile);
    img_opt->excludes(man_opt);
    pred->add_option("--root", pr_root, "Directory that relative manifest paths resolve against");
    pred->add_option("--embeddings", pr_emb, "Embeddings for DEEP blocks")->check(CLI::ExistingFile);
    pred->add_option("--id", pr_id, "Embedding id of --image (default: file stem)");
    pred->callback([&] {
        if (pr_image.empty() && pr_manifest.empty()) throw CLI::RequiredError("--image or --manifest");
        action = [&] {
            const auto model = load_model(pr_model);
            const auto meta = nlohmann::json::parse(model.metadata, nullptr, false);
            HandcraftedConfig hc;
            std::optional<PreprocessConfig> pre;
            if (meta.is_object() && meta.contains("extraction")) {
                const auto& x = meta["extraction"];
                hc.hog_input = x.value("hog_input", hc.hog_input);
                hc.gabor_input = x.value("gabor_input", hc.gabor_input);
                hc.lbp_interpolate = x.value("lbp_interpolate", hc.lbp_interpolate);
                if (x.value("preprocess", false)) {
                    PreprocessConfig p;
                    p.target_width = p.target_height = x.value("size", p.target_width);
                    p.gamma = x.value("gamma", p.gamma);
                    p.clahe_clip = x.value("clahe_clip", p.clahe_clip);
                    p.enable_clahe = x.value("clahe", p.enable_clahe);
                    p.enable_gamma = x.value("gamma_stage", p.enable_gamma);
                    pre = p;
                }
            }
            std::optional<EmbeddingSet> emb;
            if (!pr_emb.empty()) emb = load_embeddings(pr_emb);
            std::vector<BlockKind> hand;
            for (auto k : model.signature.kinds())
                if (k != BlockKind::Deep) hand.push_back(k);

            auto vector_for = [&](ImageU8 img, const std::string& id) {
                std::vector<double> x;
                if (model.signature.has(BlockKind::Deep)) {
                    require(emb.has_value(), Errc::MissingFeatures, "model uses DEEP; pass --embeddings");
                    const auto* v = emb->find(id);
                    require(v != nullptr, Errc::MissingFeatures, "no embedding for " + id);
                    x.assign(v->begin(), v->end());
                }
                if (!hand.empty()) {
                    if (pre) img = preprocess_pipeline(img, *pre);
                    for (const auto& b : extract_handcrafted(img, hand, hc)) x.insert(x.end(), b.values.begin(), b.values.end());
                }
                return predict(model, x);
            };
            if (!pr_image.empty()) {
                const auto id = pr_id.empty() ? fs::path(pr_image).stem().string() : pr_id;
                const auto p = vector_for(load_image(pr_image), id);
                std::cout << pr_image << ',' << label_name(p.label) << ',' << format_score(p.score) << '\n';
            } else {
                const auto ds = load_manifest(pr_manifest);
                const auto source = file_image_source(pr_root);
                std::vector<std::string> lines(ds.size());
                parallel_for(ds.size(), g.jobs, [&](std::size_t i) {
                    try {
                        const auto p = vector_for(hand.empty() ? ImageU8(1, 1, 1) : source(ds[i]), ds[i].id);
                        lines[i] = ds[i].id + ',' + std::string(label_name(p.label)) + ',' + format_score(p.score);
                    } catch (const Error& err) {
                        throw Error(err.code(), ds[i].id + ": " + err.what());
                    }
                });
                for (const auto& l : lines) std::cout << l << '\n';
            }
        };
    });

    // evaluate -------------------------------------------------------------
    auto* eval = app.add_subcommand("evaluate", "Score a model on a split and print metrics as JSON");
    SourceArgs ev_src;
    std::string ev_model, ev_manifest, ev_split = "test", ev_avg = "macro", ev_out;
    ev_src.add_to(eval);
    eval->add_option("--model", ev_model, "Model file")->required()->check(CLI::ExistingFile);
    eval->add_option("--manifest", ev_manifest, "Manifest with labels and split tags")->required()->check(CLI::ExistingFile);
    eval->add_option("--split", ev_split, "Rows to score: train, test or all")->capture_default_str();
    eval->add_option("--averaging", ev_avg, "macro or weighted")->capture_default_str();
    eval->add_option("--out", ev_out, "Output file (default: standard output)");
    eval->callback([&] {
        action = [&] {
            const auto model = load_model(ev_model);
            const auto ds = load_manifest(ev_manifest);
            const auto sources = ev_src.load();
            const auto ids = ids_in(ds, parse_split_arg(ev_split));
            const auto t = assemble_features(ids, model.signature.kinds(), pointers(sources));
            std::vector<ClassLabel> truth, guess;
            for (std::size_t i = 0; i < ids.size(); ++i) {
                truth.push_back(ds.find(ids[i])->label);
                guess.push_back(predict(model, t.values().row(i)).label);
            }
            const auto cm = confusion_matrix(truth, guess);
            const auto m = compute_metrics(cm, parse_averaging(ev_avg));
            nlohmann::ordered_json j;
            j["samples"] = ids.size();
            j["averaging"] = std::string(averaging_name(m.averaging));
            j["accuracy"] = 100 * m.accuracy;
            j["precision"] = 100 * m.precision;
            j["recall"] = 100 * m.recall;
            j["f1"] = 100 * m.f1;
            j["undefined_terms"] = m.undefined_terms;
            auto& names = j["classes"] = nlohmann::ordered_json::array();
            for (int c = 0; c < kNumClasses; ++c) names.push_back(std::string(label_name(label_from_code(c))));
            auto& rows = j["confusion"] = nlohmann::ordered_json::array();  // rows are truth, columns prediction
            for (int r = 0; r < kNumClasses; ++r) {
                std::vector<std::uint64_t> row;
                for (int c = 0; c < kNumClasses; ++c) row.push_back(cm.at(r, c));
                rows.push_back(row);
            }
            emit(ev_out, j.dump(2) + '\n');
        };
    });

    // grid -----------------------------------------------------------------
    auto* grid = app.add_subcommand("grid", "Run every feature combination with every classifier");
    std::string gr_cfg, gr_out, gr_format;
    grid->add_option("--config", gr_cfg, "Grid configuration (JSON)")->required()->check(CLI::ExistingFile);
    grid->add_option("--out", gr_out, "Report file (default: standard output)");
    grid->add_option("--format", gr_format, "csv, json or md (default: from the --out extension, else csv)");
    grid->callback([&] {
        action = [&] {
            auto cfg = load_grid_config(gr_cfg);
            if (app.get_option("--seed")->count() > 0) cfg.seed = g.seed;
            if (app.get_option("--jobs")->count() > 0) cfg.jobs = g.jobs;
            std::string fmt = gr_format;
            if (fmt.empty()) {
                const auto ext = fs::path(gr_out).extension().string();
                fmt = ext == ".json" ? "json" : ext == ".md" ? "md" : "csv";
            }
            const auto format = parse_report_format(fmt);
            const auto rows = run_experiment_grid(cfg);
            int failed = 0;
            for (const auto& r : rows)
                if (r.failed) {
                    ++failed;
                    std::cerr << "cell " << combo_name(r.combo) << '/' << classifier_name(r.classifier)
                              << " failed: " << r.error << '\n';
                }
            emit(gr_out, render_report(rows, format, cfg.averaging));
            require(failed == 0, Errc::InvalidArgument, std::to_string(failed) + " grid cells failed");
        };
    });

    // report ---------------------------------------------------------------
    auto* report = app.add_subcommand("report", "Re-render a JSON grid report");
    std::string rp_in, rp_out, rp_format = "md";
    report->add_option("--in", rp_in, "JSON report")->required()->check(CLI::ExistingFile);
    report->add_option("--format", rp_format, "csv, json or md")->capture_default_str();
    report->add_option("--out", rp_out, "Output file (default: standard output)");
    report->callback([&] {
        action = [&] {
            const auto text = read_text_file(rp_in);
            const auto j = nlohmann::json::parse(text, nullptr, false);
            const auto avg = j.is_object() ? parse_averaging(j.value("averaging", "macro")) : Averaging::Macro;
            emit(rp_out, render_report(rows_from_json(text), parse_report_format(rp_format), avg));
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    try {
        action();
    } catch (const Error& e) {
        std::cerr << "pvdefect: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "pvdefect: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
