// Command-line front end: corpus ingestion, synthetic corpora, training,
// evaluation, alignment, sweeps, ablations, significance testing and
// latent export. Exit codes: 0 ok, 1 usage, 2 data error, 3 divergence.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "ctm/checkpoint.hpp"
#include "ctm/contrastive.hpp"
#include "ctm/corpus.hpp"
#include "ctm/corpus_io.hpp"
#include "ctm/error.hpp"
#include "ctm/eval.hpp"
#include "ctm/model.hpp"
#include "ctm/sampler.hpp"
#include "ctm/synth.hpp"
#include "ctm/train.hpp"

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ctm::DataError("cannot open: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    for (double v : parse_double_list(csv)) out.push_back(static_cast<int>(v));
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoull(item));
    }
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ctm::DataError("cannot open for writing: " + path);
    out << content;
    if (!out) throw ctm::DataError("write failed: " + path);
}

std::optional<ctm::Split> parse_split(const std::string& name) {
    if (name == "train") return ctm::Split::train;
    if (name == "val") return ctm::Split::val;
    if (name == "test") return ctm::Split::test;
    if (name == "all") return std::nullopt;
    throw ctm::DataError("unknown split: " + name);
}

// Options shared by train-like subcommands. A JSON config file provides the
// baseline; any flag given on the command line overrides its field.
struct TrainCli {
    std::string config_path;
    int topics = 0, hidden = 0, k = 0, epochs = 0, batch_size = 0, topics_m = 0,
        npmi_top_n = 0;
    double learning_rate = 0.0, beta0 = 0.0, alpha = 0.0, fixed_beta = 0.0,
           momentum = 0.0, clip_norm = 0.0;
    std::uint64_t seed = 0;
    std::int64_t total_steps = 0;
    std::string variant, strategy, importance, optimizer;
    bool covariates = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--topics", topics, "number of topics T");
        cmd->add_option("--hidden", hidden, "encoder hidden width H");
        cmd->add_option("--k", k, "substituted-token count k");
        cmd->add_option("--epochs", epochs, "training epochs");
        cmd->add_option("--batch-size", batch_size, "documents per batch");
        cmd->add_option("--learning-rate", learning_rate, "SGD learning rate");
        cmd->add_option("--seed", seed, "random seed");
        cmd->add_option("--variant", variant,
                        "loss variant: full|positive_only|negative_only|elbo_only");
        cmd->add_option("--strategy", strategy,
                        "sampling: word_based|zero_sampling|random_doc|topic_based");
        cmd->add_option("--importance", importance, "importance measure: tfidf|tf|idf");
        cmd->add_option("--topics-m", topics_m, "topic_based: number of salient topics M");
        cmd->add_option("--beta0", beta0, "schedule base (overridden by init unless fixed)");
        cmd->add_option("--fixed-beta", fixed_beta, "constant beta, bypasses the schedule");
        cmd->add_option("--alpha", alpha, "negative_only variant weight");
        cmd->add_option("--total-steps", total_steps, "schedule horizon override");
        cmd->add_option("--optimizer", optimizer, "sgd|momentum|adam");
        cmd->add_option("--momentum", momentum, "momentum coefficient");
        cmd->add_option("--clip-norm", clip_norm, "global gradient norm clip");
        cmd->add_option("--npmi-top-n", npmi_top_n, "words per topic for NPMI");
        cmd->add_flag("--covariates", covariates, "concatenate label one-hot to encoder input");
    }

    ctm::TrainConfig resolve(const CLI::App* cmd) const {
        ctm::TrainConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ctm::DataError("cannot open config: " + config_path);
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw ctm::DataError(std::string("config parse error: ") + e.what());
            }
            cfg = ctm::train_config_from_json(j);
        }
        if (cmd->count("--topics")) cfg.topics = topics;
        if (cmd->count("--hidden")) cfg.hidden = hidden;
        if (cmd->count("--k")) cfg.k = k;
        if (cmd->count("--epochs")) cfg.epochs = epochs;
        if (cmd->count("--batch-size")) cfg.batch_size = batch_size;
        if (cmd->count("--learning-rate")) cfg.learning_rate = learning_rate;
        if (cmd->count("--seed")) cfg.seed = seed;
        if (cmd->count("--variant"))
            cfg.contrastive.variant = ctm::variant_from_name(variant);
        if (cmd->count("--strategy"))
            cfg.sampler.strategy = ctm::strategy_from_name(strategy);
        if (cmd->count("--importance"))
            cfg.sampler.importance = ctm::importance_from_name(importance);
        if (cmd->count("--topics-m")) cfg.sampler.topics_m = topics_m;
        if (cmd->count("--beta0")) cfg.contrastive.beta0 = beta0;
        if (cmd->count("--fixed-beta")) cfg.contrastive.fixed_beta = fixed_beta;
        if (cmd->count("--alpha")) cfg.contrastive.alpha = alpha;
        if (cmd->count("--total-steps")) cfg.contrastive.total_steps = total_steps;
        if (cmd->count("--optimizer")) cfg.optimizer = optimizer;
        if (cmd->count("--momentum")) cfg.momentum = momentum;
        if (cmd->count("--clip-norm")) cfg.clip_norm = clip_norm;
        if (cmd->count("--npmi-top-n")) cfg.npmi_top_n = npmi_top_n;
        if (cmd->count("--covariates")) cfg.covariates = covariates;
        return cfg;
    }
};

int run(int argc, char** argv) {
    CLI::App app{"contrastive neural topic modeling toolkit"};
    app.require_subcommand(1);

    // ---- ingest ----
    auto* ingest_cmd = app.add_subcommand("ingest", "build a corpus from plain text");
    std::string in_path, out_path, stopword_path, label_path, ratios_csv = "0.48,0.12,0.40";
    int min_df = 1, min_token_len = 1, max_vocab = 0;
    std::uint64_t split_seed = 0;
    bool no_split = false;
    ingest_cmd->add_option("--input", in_path, "UTF-8 text, one document per line")
        ->required();
    ingest_cmd->add_option("--output", out_path, "corpus file to write")->required();
    ingest_cmd->add_option("--stopwords", stopword_path, "stopword file, one token per line");
    ingest_cmd->add_option("--labels", label_path, "label file, one integer per line");
    ingest_cmd->add_option("--min-df", min_df, "minimum document frequency");
    ingest_cmd->add_option("--min-token-len", min_token_len,
                           "drop tokens with length <= this");
    ingest_cmd->add_option("--max-vocab", max_vocab,
                           "keep only the most frequent tokens (0 = no cap)");
    ingest_cmd->add_option("--ratios", ratios_csv, "train,val,test fractions");
    ingest_cmd->add_option("--split-seed", split_seed, "shuffle seed for the split");
    ingest_cmd->add_flag("--no-split", no_split, "skip the split step");

    // ---- synth ----
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic LDA corpus");
    int s_topics = 5, s_vocab = 200, s_docs = 2000, s_len = 80;
    double s_topic_sp = 0.08, s_doc_sp = 0.2;
    std::uint64_t s_seed = 0;
    std::string s_out, s_true_out, s_ratios = "0.8,0.1,0.1";
    std::uint64_t s_split_seed = 0;
    synth_cmd->add_option("--topics", s_topics, "number of topics");
    synth_cmd->add_option("--vocab", s_vocab, "vocabulary size");
    synth_cmd->add_option("--docs", s_docs, "number of documents");
    synth_cmd->add_option("--doc-len", s_len, "tokens per document");
    synth_cmd->add_option("--topic-sparsity", s_topic_sp, "Dirichlet over words");
    synth_cmd->add_option("--doc-sparsity", s_doc_sp, "Dirichlet over topics");
    synth_cmd->add_option("--seed", s_seed, "generator seed");
    synth_cmd->add_option("--ratios", s_ratios, "train,val,test fractions");
    synth_cmd->add_option("--split-seed", s_split_seed, "shuffle seed for the split");
    synth_cmd->add_option("--output", s_out, "corpus file to write")->required();
    synth_cmd->add_option("--true-topics", s_true_out,
                          "write the true topic-word matrix as CSV");

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train the contrastive topic model");
    std::string t_corpus, t_checkpoint, t_metrics;
    TrainCli t_cli;
    train_cmd->add_option("--corpus", t_corpus, "corpus file")->required();
    train_cmd->add_option("--checkpoint", t_checkpoint, "checkpoint file to write")
        ->required();
    train_cmd->add_option("--metrics", t_metrics, "metrics JSON-lines file to write");
    t_cli.attach(train_cmd);

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "NPMI topic report for a checkpoint");
    std::string e_corpus, e_checkpoint, e_out, e_split = "train";
    int e_top_n = 10;
    eval_cmd->add_option("--corpus", e_corpus, "corpus file")->required();
    eval_cmd->add_option("--checkpoint", e_checkpoint, "checkpoint file")->required();
    eval_cmd->add_option("--top-n", e_top_n, "words per topic");
    eval_cmd->add_option("--reference-split", e_split,
                         "co-occurrence reference: train|val|test|all");
    eval_cmd->add_option("--output", e_out, "report JSON file");

    // ---- align ----
    auto* align_cmd = app.add_subcommand("align", "competitive-link two checkpoints");
    std::string a_ck_a, a_ck_b, a_out;
    double a_threshold = std::log(2.0) * 0.9;
    int a_max_pairs = 0;
    align_cmd->add_option("--a", a_ck_a, "first checkpoint")->required();
    align_cmd->add_option("--b", a_ck_b, "second checkpoint")->required();
    align_cmd->add_option("--threshold", a_threshold, "JS threshold");
    align_cmd->add_option("--max-pairs", a_max_pairs, "cap on emitted pairs (0 = none)");
    align_cmd->add_option("--output", a_out, "alignment JSON file");

    // ---- sweep-k ----
    auto* sweep_cmd = app.add_subcommand("sweep-k", "train across k values");
    std::string sw_corpus, sw_k_csv = "1,5,10,15,25,30", sw_seeds_csv = "0,1,2,3,4",
                sw_out;
    TrainCli sw_cli;
    sweep_cmd->add_option("--corpus", sw_corpus, "corpus file")->required();
    sweep_cmd->add_option("--k-values", sw_k_csv, "comma-separated k list");
    sweep_cmd->add_option("--seeds", sw_seeds_csv, "comma-separated seed list");
    sweep_cmd->add_option("--output", sw_out, "CSV output file");
    sw_cli.attach(sweep_cmd);

    // ---- ablate ----
    auto* ablate_cmd = app.add_subcommand("ablate", "compare the loss variants");
    std::string ab_corpus, ab_seeds_csv = "0,1,2,3,4", ab_out;
    TrainCli ab_cli;
    ablate_cmd->add_option("--corpus", ab_corpus, "corpus file")->required();
    ablate_cmd->add_option("--seeds", ab_seeds_csv, "comma-separated seed list");
    ablate_cmd->add_option("--output", ab_out, "CSV output file");
    ab_cli.attach(ablate_cmd);

    // ---- sigtest ----
    auto* sig_cmd = app.add_subcommand("sigtest", "Welch's t-test on per-seed means");
    std::string sig_a, sig_b;
    sig_cmd->add_option("--a", sig_a, "comma-separated sample A")->required();
    sig_cmd->add_option("--b", sig_b, "comma-separated sample B")->required();

    // ---- export-latents ----
    auto* ex_cmd = app.add_subcommand("export-latents", "write per-document theta CSV");
    std::string x_corpus, x_checkpoint, x_out, x_split = "train";
    ex_cmd->add_option("--corpus", x_corpus, "corpus file")->required();
    ex_cmd->add_option("--checkpoint", x_checkpoint, "checkpoint file")->required();
    ex_cmd->add_option("--split", x_split, "train|val|test|all");
    ex_cmd->add_option("--output", x_out, "CSV file to write")->required();

    // ---- sample-inspect ----
    auto* ins_cmd = app.add_subcommand("sample-inspect", "audit one document's sample pair");
    std::string i_corpus, i_checkpoint, i_strategy = "word_based", i_importance = "tfidf";
    int i_doc = 0, i_k = 0, i_topics_m = 1;
    ins_cmd->add_option("--corpus", i_corpus, "corpus file")->required();
    ins_cmd->add_option("--checkpoint", i_checkpoint, "checkpoint file")->required();
    ins_cmd->add_option("--doc", i_doc, "document index")->required();
    ins_cmd->add_option("--k", i_k, "substituted-token count (0 = from checkpoint config)");
    ins_cmd->add_option("--strategy", i_strategy, "word_based|zero_sampling|topic_based");
    ins_cmd->add_option("--importance", i_importance, "tfidf|tf|idf");
    ins_cmd->add_option("--topics-m", i_topics_m, "topic_based: salient topic count");

    CLI11_PARSE(app, argc, argv);

    if (*ingest_cmd) {
        const auto lines = read_lines(in_path);
        std::unordered_set<std::string> stopwords;
        if (!stopword_path.empty()) {
            for (const auto& w : read_lines(stopword_path))
                if (!w.empty()) stopwords.insert(w);
        }
        std::vector<int> labels;
        const std::vector<int>* labels_ptr = nullptr;
        if (!label_path.empty()) {
            for (const auto& l : read_lines(label_path))
                labels.push_back(l.empty() ? -1 : std::stoi(l));
            labels_ptr = &labels;
        }
        ctm::IngestReport report;
        auto corpus = ctm::ingest(lines, min_df, stopwords, min_token_len, max_vocab,
                                  labels_ptr, &report);
        ctm::compute_tfidf(corpus);
        if (!no_split) {
            const auto r = parse_double_list(ratios_csv);
            if (r.size() != 3) throw ctm::DataError("--ratios needs three fractions");
            ctm::split_corpus(corpus, r[0], r[1], r[2], split_seed);
        }
        ctm::save_corpus(corpus, out_path);
        std::cerr << "ingest: " << report.docs_kept << "/" << report.docs_in
                  << " documents kept (" << report.docs_dropped_empty
                  << " dropped empty), vocabulary " << report.vocab_size << "\n";
        return 0;
    }

    if (*synth_cmd) {
        auto synth = ctm::synth_lda_corpus(s_topics, s_vocab, s_docs, s_len, s_topic_sp,
                                           s_doc_sp, s_seed);
        const auto r = parse_double_list(s_ratios);
        if (r.size() != 3) throw ctm::DataError("--ratios needs three fractions");
        ctm::split_corpus(synth.corpus, r[0], r[1], r[2], s_split_seed);
        ctm::save_corpus(synth.corpus, s_out);
        if (!s_true_out.empty()) {
            std::ostringstream csv;
            char buf[32];
            for (int t = 0; t < synth.true_topic_word.rows(); ++t) {
                for (int v = 0; v < synth.true_topic_word.cols(); ++v) {
                    if (v) csv << ',';
                    std::snprintf(buf, sizeof(buf), "%.9g", synth.true_topic_word(t, v));
                    csv << buf;
                }
                csv << '\n';
            }
            write_file(s_true_out, csv.str());
        }
        std::cerr << "synth: " << s_docs << " documents, vocabulary " << s_vocab << "\n";
        return 0;
    }

    if (*train_cmd) {
        const auto corpus = ctm::load_corpus(t_corpus);
        const auto cfg = t_cli.resolve(train_cmd);
        const auto result = ctm::train(corpus, cfg, [](const ctm::MetricsRecord& r) {
            std::cerr << "epoch " << r.epoch << " step " << r.step << " total "
                      << r.total << " beta " << r.beta;
            if (r.val_npmi) std::cerr << " npmi " << *r.val_npmi;
            std::cerr << " (" << r.wall_ms << " ms)\n";
        });
        if (!t_metrics.empty()) {
            std::ostringstream lines;
            for (const auto& rec : result.metrics)
                lines << ctm::metrics_json_line(rec) << "\n";
            write_file(t_metrics, lines.str());
        }
        ctm::save_checkpoint(result.params, ctm::to_json(cfg), result.beta0, t_checkpoint);
        std::cerr << "train: beta0 " << result.beta0 << ", total steps "
                  << result.total_steps << ", final NPMI " << result.final_npmi << "\n";
        return 0;
    }

    if (*eval_cmd) {
        const auto corpus = ctm::load_corpus(e_corpus);
        const auto ck = ctm::load_checkpoint(e_checkpoint);
        const auto stats = ctm::build_cooccurrence(corpus, parse_split(e_split));
        auto report = ctm::make_topic_report(ck.params, corpus, stats, e_top_n);
        report.model_id = e_checkpoint;
        if (ck.config.contains("seed")) report.seed = ck.config.at("seed").get<std::uint64_t>();
        report.config_digest =
            std::to_string(std::hash<std::string>{}(ck.config.dump()));
        const auto j = ctm::topic_report_json(report);
        if (!e_out.empty())
            write_file(e_out, j.dump(2) + "\n");
        else
            std::cout << j.dump(2) << "\n";
        std::cerr << "eval: mean NPMI " << report.mean_npmi << "\n";
        return 0;
    }

    if (*align_cmd) {
        const auto ck_a = ctm::load_checkpoint(a_ck_a);
        const auto ck_b = ctm::load_checkpoint(a_ck_b);
        const auto result = ctm::competitive_link(ctm::topic_distributions(ck_a.params),
                                                  ctm::topic_distributions(ck_b.params),
                                                  a_threshold, a_max_pairs);
        const auto j = ctm::alignment_json(result);
        if (!a_out.empty())
            write_file(a_out, j.dump(2) + "\n");
        else
            std::cout << j.dump(2) << "\n";
        std::cerr << "align: " << result.pairs.size() << " pairs\n";
        return 0;
    }

    if (*sweep_cmd) {
        const auto corpus = ctm::load_corpus(sw_corpus);
        const auto cfg = sw_cli.resolve(sweep_cmd);
        const auto rows = ctm::sweep_k(corpus, cfg, parse_int_list(sw_k_csv),
                                       parse_seed_list(sw_seeds_csv));
        std::ostringstream csv;
        csv << "k,mean_npmi,std_npmi\n";
        for (const auto& row : rows)
            csv << row.k << ',' << row.mean_npmi << ',' << row.std_npmi << '\n';
        if (!sw_out.empty()) write_file(sw_out, csv.str());
        std::cout << csv.str();
        return 0;
    }

    if (*ablate_cmd) {
        const auto corpus = ctm::load_corpus(ab_corpus);
        const auto cfg = ab_cli.resolve(ablate_cmd);
        const auto rows = ctm::run_ablation(corpus, cfg, parse_seed_list(ab_seeds_csv));
        std::ostringstream csv;
        csv << "variant,mean_npmi,std_npmi\n";
        for (const auto& row : rows)
            csv << ctm::variant_name(row.variant) << ',' << row.mean_npmi << ','
                << row.std_npmi << '\n';
        if (!ab_out.empty()) write_file(ab_out, csv.str());
        std::cout << csv.str();
        return 0;
    }

    if (*sig_cmd) {
        const auto a = parse_double_list(sig_a);
        const auto b = parse_double_list(sig_b);
        const auto r = ctm::welch_t_test(a, b);
        std::cout << "t " << r.t << " df " << r.df << " p " << r.p << "\n";
        return 0;
    }

    if (*ex_cmd) {
        const auto corpus = ctm::load_corpus(x_corpus);
        const auto ck = ctm::load_checkpoint(x_checkpoint);
        std::ostringstream csv;
        ctm::export_latents(ck.params, corpus, parse_split(x_split), csv);
        write_file(x_out, csv.str());
        std::cerr << "export-latents: wrote " << x_out << "\n";
        return 0;
    }

    if (*ins_cmd) {
        const auto corpus = ctm::load_corpus(i_corpus);
        const auto ck = ctm::load_checkpoint(i_checkpoint);
        if (i_doc < 0 || i_doc >= corpus.num_docs())
            throw ctm::DataError("sample-inspect: document index out of range");
        ctm::SamplerConfig scfg;
        scfg.strategy = ctm::strategy_from_name(i_strategy);
        scfg.importance = ctm::importance_from_name(i_importance);
        scfg.k = i_k > 0 ? i_k
                         : (ck.config.contains("k") ? ck.config.at("k").get<int>() : 15);
        scfg.topics_m = i_topics_m;
        if (scfg.strategy == ctm::SampleStrategy::random_doc)
            throw ctm::DataError("sample-inspect: random_doc draws no pair to audit");

        const auto& doc = corpus.docs[static_cast<std::size_t>(i_doc)];
        const ctm::Vec x = ctm::dense_counts(doc, ck.params.dims.vocab);
        ctm::Vec cov;
        const ctm::Vec* cov_ptr = nullptr;
        if (ck.params.dims.covariates > 0) {
            cov = ctm::one_hot(doc.label, ck.params.dims.covariates);
            cov_ptr = &cov;
        }
        const auto fc = ctm::forward_mean(x, cov_ptr, ck.params);
        const ctm::Vec recon_probs = ctm::decode(fc.lat.theta, ck.params);
        const ctm::Vec recon_counts = recon_probs * x.sum();
        const auto scores = ctm::importance_scores(
            doc, corpus.tfidf[static_cast<std::size_t>(i_doc)], scfg.importance);
        const auto pair = ctm::make_pair(scfg, x, recon_counts, scores, fc.lat.theta,
                                         ck.params.topic_word);

        std::unordered_set<int> in_pos(pair.pos_indices.begin(), pair.pos_indices.end());
        std::unordered_set<int> in_neg(pair.neg_indices.begin(), pair.neg_indices.end());
        std::printf("%-16s %6s %12s %4s %4s %12s\n", "token", "count", "score", "pos",
                    "neg", "recon");
        for (std::size_t i = 0; i < doc.entries.size(); ++i) {
            const auto& e = doc.entries[i];
            std::printf("%-16s %6d %12.5f %4s %4s %12.5f\n",
                        corpus.vocab.tokens[static_cast<std::size_t>(e.token)].c_str(),
                        e.count, scores[i].score, in_pos.count(e.token) ? "*" : "",
                        in_neg.count(e.token) ? "*" : "", recon_counts(e.token));
        }
        if (pair.degenerate)
            std::printf("(degenerate pair: document too short for k=%d)\n", scfg.k);
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ctm::NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const ctm::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
