// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "cli.hpp"

#include "ssgsim/bytecode.hpp"
#include "ssgsim/cfg.hpp"
#include "ssgsim/dataset.hpp"
#include "ssgsim/embedding.hpp"
#include "ssgsim/error.hpp"
#include "ssgsim/index.hpp"
#include "ssgsim/io.hpp"
#include "ssgsim/metrics.hpp"
#include "ssgsim/ssg.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace ssgsim::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    bool quiet = false;
    bool json_logs = false;
};

class Log {
public:
    Log(const Globals& g, std::ostream& err) : g_(g), err_(err) {}

    void info(const std::string& msg) const
    {
        if (!g_.quiet)
            emit("info", msg);
    }
    void warn(const std::string& msg) const { emit("warn", msg); }
    void error(const std::string& msg) const { emit("error", msg); }

private:
    void emit(const char* level, const std::string& msg) const
    {
        if (g_.json_logs)
            err_ << nlohmann::json{{"level", level}, {"msg", msg}}.dump() << "\n";
        else
            err_ << level << ": " << msg << "\n";
    }

    const Globals& g_;
    std::ostream& err_;
};

std::string fmt(const char* spec, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

/// Shortest text that reads back to the same double.
std::string exact(double v) { return fmt("%.17g", v); }

// --- corpus helpers -----------------------------------------------------------

struct Corpus {
    std::vector<CorpusEntry> entries;
    std::vector<GraphInput> graphs;
    std::map<std::string, std::size_t> by_key;

    explicit Corpus(const std::string& manifest) : entries(load_corpus(manifest))
    {
        for (std::size_t i = 0; i < entries.size(); ++i) {
            graphs.push_back(prepare(entries[i].ssg));
            if (!by_key.emplace(entries[i].key(), i).second)
                throw Error(ErrorCode::InvalidConfig, "duplicate corpus key " + entries[i].key());
        }
    }

    std::size_t at(const std::string& key) const
    {
        auto it = by_key.find(key);
        if (it == by_key.end())
            throw Error(ErrorCode::InvalidConfig, "pair refers to unknown corpus entry " + key);
        return it->second;
    }

    std::vector<GraphPair> pairs(const std::string& path) const
    {
        std::vector<GraphPair> out;
        for (const auto& p : read_pairs(path))
            out.push_back({at(p.a), at(p.b), p.y});
        return out;
    }
};

Ssg read_ssg(const fs::path& path)
{
    nlohmann::json j = nlohmann::json::parse(read_file(path.string()), nullptr, false);
    if (j.is_discarded())
        throw Error(ErrorCode::InvalidSsg, path.string() + " is not valid JSON");
    return ssg_from_json(j);
}

/// "<origin>_<selector>.ssg.json" -> origin.
std::string origin_of(const fs::path& path)
{
    std::string name = path.filename().string();
    const std::string suffix = ".ssg.json";
    if (name.size() > suffix.size() && name.ends_with(suffix))
        name.resize(name.size() - suffix.size());
    if (auto cut = name.rfind('_'); cut != std::string::npos && cut > 0)
        name.resize(cut);
    return name;
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& suffix)
{
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && (suffix.empty() || e.path().filename().string().ends_with(suffix)))
            out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string ssg_file_name(const std::string& origin, const FunctionId& fn)
{
    return origin + "_" + fn.to_string() + ".ssg.json";
}

// --- subcommands ------------------------------------------------------------

struct ExtractArgs {
    std::string input, out;
};

int cmd_extract(const ExtractArgs& a, const Globals& g, const Log& log, std::ostream& out)
{
    std::error_code ec;
    std::vector<fs::path> inputs;
    if (fs::is_directory(a.input, ec)) {
        inputs = list_files(a.input, "");
    } else if (fs::is_regular_file(a.input, ec)) {
        inputs.push_back(a.input);
    } else {
        log.error("cannot read input " + a.input);
        return kExitInvalid;
    }
    if (inputs.empty()) {
        log.warn("no contracts found in " + a.input);
        return kExitOk;
    }
    fs::create_directories(a.out, ec);
    if (ec) {
        log.error("cannot create " + a.out + ": " + ec.message());
        return kExitInvalid;
    }

    struct Outcome {
        std::vector<std::string> warnings;
        std::string failure;
        std::size_t written = 0;
    };
    std::vector<Outcome> outcomes(inputs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < inputs.size(); i = next++) {
            Outcome& o = outcomes[i];
            try {
                Bytecode code = read_hex_file(inputs[i]);
                ExtractDiagnostics diag;
                auto ssgs = extract_ssgs(code, &diag);
                if (diag.no_dispatcher)
                    o.warnings.push_back(code.origin_id + ": no dispatcher, extracted the fallback only");
                for (const auto& w : diag.warnings)
                    o.warnings.push_back(code.origin_id + ": " + w);
                for (const auto& [fn, ssg] : ssgs) {
                    write_file_atomic((fs::path(a.out) / ssg_file_name(code.origin_id, fn)).string(),
                                      to_canonical_json(ssg));
                    ++o.written;
                }
            } catch (const std::exception& e) {
                o.failure = inputs[i].string() + ": " + e.what();
            }
        }
    };
    const unsigned n_threads = std::max(1U, std::min<unsigned>(g.jobs, static_cast<unsigned>(inputs.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    // Report in input order so logs do not depend on scheduling.
    std::size_t failed = 0, written = 0;
    for (const auto& o : outcomes) {
        for (const auto& w : o.warnings)
            log.warn(w);
        if (!o.failure.empty()) {
            log.error(o.failure);
            ++failed;
        }
        written += o.written;
    }
    out << "extracted " << written << " functions from " << inputs.size() - failed << " of " << inputs.size()
        << " contracts\n";
    return failed ? kExitPartial : kExitOk;
}

struct DotArgs {
    std::string ssg, out;
};

int cmd_export_dot(const DotArgs& a, std::ostream& out)
{
    Ssg ssg = read_ssg(a.ssg);
    std::ostringstream dot;
    write_dot(dot, ssg);
    if (a.out.empty())
        out << dot.str();
    else
        write_file_atomic(a.out, dot.str());
    return kExitOk;
}

struct SynthArgs {
    std::string out;
    std::size_t classes = 24, variants = 4, families = 1;
};

int cmd_synth(const SynthArgs& a, const Globals& g, std::ostream& out)
{
    SynthConfig cfg;
    cfg.classes = a.classes;
    cfg.variants = a.variants;
    cfg.families = a.families;
    cfg.seed = g.seed;
    const fs::path root(a.out);
    fs::create_directories(root / "hex");
    fs::create_directories(root / "ssg");
    std::vector<ManifestEntry> manifest;
    for (const auto& sc : generate_synthetic(cfg)) {
        const std::string key = sc.source_function_id + "." + sc.variant_id;
        write_file_atomic((root / "hex" / (key + ".hex")).string(), to_hex(sc.code.bytes) + "\n");
        Program program(sc.code);
        Ssg ssg = extract_ssg(program, analyze_dispatcher(program), FunctionId::of(sc.selector));
        const std::string rel = "ssg/" + key + ".ssg.json";
        write_file_atomic((root / rel).string(), to_canonical_json(ssg));
        manifest.push_back({key, sc.source_function_id, sc.variant_id, rel});
    }
    write_manifest((root / "manifest.json").string(), manifest);
    out << "wrote " << manifest.size() << " contracts to " << a.out << "\n";
    return kExitOk;
}

struct SplitArgs {
    std::string corpus, out;
};

int cmd_split(const SplitArgs& a, const Globals& g, std::ostream& out)
{
    auto entries = load_corpus(a.corpus);
    CorpusSplit s = split_corpus(entries, g.seed);
    auto keys = [&](const std::vector<std::size_t>& idx) {
        std::vector<std::string> k;
        for (auto i : idx)
            k.push_back(entries[i].key());
        return k;
    };
    nlohmann::json j{{"train", keys(s.train)}, {"val", keys(s.val)}, {"test", keys(s.test)}};
    write_file_atomic(a.out, j.dump(2) + "\n");
    out << "train " << s.train.size() << " val " << s.val.size() << " test " << s.test.size() << "\n";
    return kExitOk;
}

struct PairsArgs {
    std::string corpus, split, subset = "train", out;
    std::optional<std::size_t> positives, negatives;
    bool all = false;
};

int cmd_pairs(const PairsArgs& a, const Globals& g, std::ostream& out)
{
    auto entries = load_corpus(a.corpus);
    std::map<std::string, std::size_t> by_key;
    for (std::size_t i = 0; i < entries.size(); ++i)
        by_key.emplace(entries[i].key(), i);

    std::vector<std::size_t> subset;
    if (a.split.empty()) {
        subset.resize(entries.size());
        std::iota(subset.begin(), subset.end(), 0);
    } else {
        nlohmann::json j = nlohmann::json::parse(read_file(a.split), nullptr, false);
        if (j.is_discarded() || !j.contains(a.subset) || !j[a.subset].is_array())
            throw Error(ErrorCode::InvalidConfig, a.split + " has no subset " + a.subset);
        for (const auto& k : j[a.subset]) {
            auto it = by_key.find(k.get<std::string>());
            if (it == by_key.end())
                throw Error(ErrorCode::InvalidConfig, "split refers to unknown entry " + k.get<std::string>());
            subset.push_back(it->second);
        }
    }

    std::vector<LabeledPair> pairs;
    if (a.all) {
        pairs = all_pairs(entries, subset);
    } else {
        std::size_t n_pos = 0;
        if (a.positives) {
            n_pos = *a.positives;
        } else {
            for (const auto& p : all_pairs(entries, subset))
                n_pos += p.y > 0;
        }
        pairs = make_pairs(entries, subset, n_pos, a.negatives.value_or(n_pos), g.seed);
    }
    std::vector<KeyedPair> keyed;
    for (const auto& p : pairs)
        keyed.push_back({entries[p.a].key(), entries[p.b].key(), p.y});
    write_pairs(a.out, keyed);
    out << "wrote " << keyed.size() << " pairs\n";
    return kExitOk;
}

struct TrainArgs {
    std::string corpus, pairs, val_pairs, out, log;
    std::size_t epochs = 50, batch = 100;
    double lr = 0.001;
    int embed_size = 64, depth = 1;
};

int cmd_train(const TrainArgs& a, const Globals& g, const Log& log, std::ostream& out)
{
    Corpus corpus(a.corpus);
    auto train_pairs = corpus.pairs(a.pairs);
    std::vector<GraphPair> val_pairs;
    if (!a.val_pairs.empty())
        val_pairs = corpus.pairs(a.val_pairs);
    if (a.embed_size <= 0 || a.depth < 0)
        throw Error(ErrorCode::InvalidConfig, "embedding size must be positive and depth non-negative");

    TrainingConfig cfg;
    cfg.learning_rate = a.lr;
    cfg.batch_pairs = a.batch;
    cfg.epochs = a.epochs;
    cfg.embed_size = a.embed_size;
    cfg.depth = a.depth;
    cfg.seed = g.seed;
    auto res = train<double>(corpus.graphs, train_pairs, val_pairs, cfg, [&](const EpochLog& r) {
        log.info("epoch " + std::to_string(r.epoch) + " train " + fmt("%.6f", r.train_loss) + " val " +
                 fmt("%.6f", r.val_loss) + (r.val_auc ? " auc " + fmt("%.4f", *r.val_auc) : ""));
    });
    save_model(res.model, a.out);

    std::ostringstream csv;
    csv << "epoch,train_loss,val_loss,val_auc\n";
    for (const auto& r : res.log) {
        csv << r.epoch << "," << exact(r.train_loss) << "," << exact(r.val_loss) << ","
            << (r.val_auc ? exact(*r.val_auc) : "") << "\n";
    }
    write_file_atomic(a.log.empty() ? a.out + ".log.csv" : a.log, csv.str());
    out << "trained " << res.log.size() << " epochs, kept epoch " << res.best_epoch << "\n";
    return kExitOk;
}

struct EmbedArgs {
    std::string model, corpus, out;
    std::vector<std::string> inputs;
};

struct EmbeddingRow {
    IndexKey key;
    Eigen::VectorXd v;
};

std::string embedding_csv(const std::vector<EmbeddingRow>& rows, Eigen::Index p)
{
    std::ostringstream csv;
    csv << "origin_id,selector";
    for (Eigen::Index i = 0; i < p; ++i)
        csv << ",v" << i;
    csv << "\n";
    for (const auto& r : rows) {
        csv << r.key.origin_id << "," << r.key.function.to_string();
        for (Eigen::Index i = 0; i < r.v.size(); ++i)
            csv << "," << exact(r.v[i]);
        csv << "\n";
    }
    return csv.str();
}

std::vector<EmbeddingRow> read_embedding_csv(const std::string& path)
{
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) || !line.starts_with("origin_id,selector"))
        throw Error(ErrorCode::InvalidConfig, path + " is not an embedding CSV");
    std::vector<EmbeddingRow> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (cells.size() < 3)
            throw Error(ErrorCode::InvalidConfig, path + ": short row");
        auto fn = FunctionId::parse(cells[1]);
        if (!fn)
            throw Error(ErrorCode::InvalidConfig, path + ": bad selector " + cells[1]);
        EmbeddingRow r{{cells[0], *fn}, Eigen::VectorXd(static_cast<Eigen::Index>(cells.size() - 2))};
        for (std::size_t i = 2; i < cells.size(); ++i) {
            try {
                r.v[static_cast<Eigen::Index>(i - 2)] = std::stod(cells[i]);
            } catch (const std::exception&) {
                throw Error(ErrorCode::InvalidConfig, path + ": bad number " + cells[i]);
            }
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

int cmd_embed(const EmbedArgs& a, std::ostream& out)
{
    const auto model = load_model(a.model);
    std::vector<EmbeddingRow> rows;
    if (!a.corpus.empty()) {
        for (const auto& e : load_corpus(a.corpus))
            rows.push_back({{e.key(), e.ssg.selector}, embed_ssg(e.ssg, model)});
    }
    std::vector<fs::path> files;
    for (const auto& in : a.inputs) {
        if (fs::is_directory(in)) {
            auto listed = list_files(in, ".ssg.json");
            files.insert(files.end(), listed.begin(), listed.end());
        } else {
            files.emplace_back(in);
        }
    }
    for (const auto& f : files) {
        Ssg ssg = read_ssg(f);
        rows.push_back({{origin_of(f), ssg.selector}, embed_ssg(ssg, model)});
    }
    write_file_atomic(a.out, embedding_csv(rows, model.dim()));
    out << "embedded " << rows.size() << " functions\n";
    return kExitOk;
}

struct IndexAddArgs {
    std::string db, embeddings;
};

int cmd_index_add(const IndexAddArgs& a, std::ostream& out)
{
    auto rows = read_embedding_csv(a.embeddings);
    std::optional<VectorIndex> idx;
    if (fs::exists(a.db))
        idx = load_index(a.db);
    else
        idx.emplace(rows.empty() ? 0 : rows.front().v.size());
    for (const auto& r : rows)
        idx->add(r.key, r.v);
    save_index(*idx, a.db);
    out << "index holds " << idx->size() << " entries\n";
    return kExitOk;
}

struct SearchArgs {
    std::string db, query, model, function, format = "text";
    std::size_t top_k = 10;
};

int cmd_search(const SearchArgs& a, const Log& log, std::ostream& out)
{
    const VectorIndex idx = load_index(a.db);
    const auto model = load_model(a.model);
    if (model.dim() != idx.dim()) {
        log.error("model embeds into " + std::to_string(model.dim()) + " dimensions but the index holds " +
                  std::to_string(idx.dim()));
        return kExitInvalid;
    }
    Ssg ssg;
    if (a.query.ends_with(".json")) {
        ssg = read_ssg(a.query);
    } else {
        auto ssgs = extract_ssgs(read_hex_file(a.query));
        if (!a.function.empty()) {
            auto fn = FunctionId::parse(a.function);
            if (!fn || !ssgs.count(*fn))
                throw Error(ErrorCode::UnknownFunction, "query has no function " + a.function);
            ssg = ssgs.at(*fn);
        } else if (ssgs.size() == 1) {
            ssg = ssgs.begin()->second;
        } else {
            throw Error(ErrorCode::InvalidConfig, "query has " + std::to_string(ssgs.size()) +
                                                      " functions; choose one with --function");
        }
    }
    const auto hits = search(idx, embed_ssg(ssg, model), a.top_k);
    if (a.format == "json") {
        nlohmann::json arr = nlohmann::json::array();
        for (std::size_t i = 0; i < hits.size(); ++i) {
            arr.push_back({{"rank", i + 1},
                           {"origin", hits[i].key.origin_id},
                           {"function", hits[i].key.function.to_string()},
                           {"score", hits[i].score}});
        }
        out << arr.dump(2) << "\n";
    } else {
        for (std::size_t i = 0; i < hits.size(); ++i)
            out << i + 1 << "\t" << hits[i].key.to_string() << "\t" << fmt("%.4f", hits[i].score) << "\n";
    }
    return kExitOk;
}

struct EvalArgs {
    std::string pairs, corpus, model, out, histogram;
    std::size_t bins = 20;
};

int cmd_eval(const EvalArgs& a, std::ostream& out)
{
    Corpus corpus(a.corpus);
    const auto model = load_model(a.model);
    const auto pairs = corpus.pairs(a.pairs);
    const auto scores = pair_scores(model, corpus.graphs, pairs);
    std::vector<int> labels;
    for (const auto& p : pairs)
        labels.push_back(p.y);
    const double auc = compute_auc(scores, labels);

    if (!a.out.empty()) {
        std::ostringstream csv;
        csv << "a,b,y,score\n";
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            csv << corpus.entries[pairs[i].a].key() << "," << corpus.entries[pairs[i].b].key() << "," << pairs[i].y
                << "," << exact(scores[i]) << "\n";
        }
        write_file_atomic(a.out, csv.str());
    }
    if (!a.histogram.empty()) {
        // Cosine scores lie in [-1, 1]; the last bin is closed.
        const std::size_t bins = std::max<std::size_t>(a.bins, 1);
        std::vector<std::size_t> pos(bins), neg(bins);
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double t = (std::clamp(scores[i], -1.0, 1.0) + 1.0) / 2.0;
            const std::size_t b = std::min(bins - 1, static_cast<std::size_t>(t * static_cast<double>(bins)));
            (labels[i] > 0 ? pos : neg)[b]++;
        }
        std::ostringstream csv;
        csv << "bin_low,bin_high,similar,dissimilar\n";
        for (std::size_t b = 0; b < bins; ++b) {
            const double lo = -1.0 + 2.0 * static_cast<double>(b) / static_cast<double>(bins);
            const double hi = -1.0 + 2.0 * static_cast<double>(b + 1) / static_cast<double>(bins);
            csv << exact(lo) << "," << exact(hi) << "," << pos[b] << "," << neg[b] << "\n";
        }
        write_file_atomic(a.histogram, csv.str());
    }
    out << "AUC " << fmt("%.4f", auc) << "\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Stable-semantic graph similarity for EVM bytecode", "ssgsim"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Seed for every random stream")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Extraction threads")->check(CLI::Range(1U, 1024U))->capture_default_str();
    app.add_flag("--quiet", g.quiet, "Only warnings and errors");
    app.add_flag("--json-logs", g.json_logs, "Diagnostics as JSON lines");

    ExtractArgs ex;
    auto* extract = app.add_subcommand("extract", "Extract SSGs of every function");
    extract->add_option("--input", ex.input, "Hex file or directory of hex files")->required();
    extract->add_option("--out", ex.out, "Output directory")->required();

    DotArgs dot;
    auto* export_dot = app.add_subcommand("export-dot", "Render an SSG as Graphviz");
    export_dot->add_option("--ssg", dot.ssg)->required()->check(CLI::ExistingFile);
    export_dot->add_option("--out", dot.out, "Output file (default stdout)");

    SynthArgs sy;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    synth->add_option("--out", sy.out)->required();
    synth->add_option("--classes", sy.classes)->capture_default_str()->check(CLI::PositiveNumber);
    synth->add_option("--variants", sy.variants)->capture_default_str()->check(CLI::PositiveNumber);
    synth->add_option("--families", sy.families)->capture_default_str()->check(CLI::PositiveNumber);

    SplitArgs sp;
    auto* split = app.add_subcommand("split", "Class-level train/val/test split");
    split->add_option("--corpus", sp.corpus, "Corpus manifest")->required()->check(CLI::ExistingFile);
    split->add_option("--out", sp.out)->required();

    PairsArgs pa;
    auto* pairs = app.add_subcommand("pairs", "Label similar and dissimilar pairs");
    pairs->add_option("--corpus", pa.corpus)->required()->check(CLI::ExistingFile);
    pairs->add_option("--split", pa.split, "Split file (default: whole corpus)")->check(CLI::ExistingFile);
    pairs->add_option("--subset", pa.subset)->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
    pairs->add_option("--positives", pa.positives, "Similar pairs (default: all)");
    pairs->add_option("--negatives", pa.negatives, "Dissimilar pairs (default: as many as similar)");
    pairs->add_flag("--all", pa.all, "Every pair of the subset");
    pairs->add_option("--out", pa.out)->required();

    TrainArgs tr;
    auto* trainc = app.add_subcommand("train", "Train the embedding network");
    trainc->add_option("--corpus", tr.corpus)->required()->check(CLI::ExistingFile);
    trainc->add_option("--pairs", tr.pairs)->required()->check(CLI::ExistingFile);
    trainc->add_option("--val-pairs", tr.val_pairs)->check(CLI::ExistingFile);
    trainc->add_option("--epochs", tr.epochs)->capture_default_str();
    trainc->add_option("--lr", tr.lr)->capture_default_str()->check(CLI::NonNegativeNumber);
    trainc->add_option("--batch", tr.batch)->capture_default_str()->check(CLI::PositiveNumber);
    trainc->add_option("--embed-size", tr.embed_size)->capture_default_str()->check(CLI::PositiveNumber);
    trainc->add_option("--depth", tr.depth)->capture_default_str()->check(CLI::NonNegativeNumber);
    trainc->add_option("--out", tr.out, "Model file")->required();
    trainc->add_option("--log", tr.log, "Training log CSV (default <out>.log.csv)");

    EmbedArgs em;
    auto* embedc = app.add_subcommand("embed", "Embed SSGs");
    embedc->add_option("--model", em.model)->required()->check(CLI::ExistingFile);
    embedc->add_option("--corpus", em.corpus, "Corpus manifest")->check(CLI::ExistingFile);
    embedc->add_option("--input", em.inputs, "SSG files or directories")->check(CLI::ExistingPath);
    embedc->add_option("--out", em.out, "Embedding CSV")->required();

    IndexAddArgs ia;
    auto* index_add = app.add_subcommand("index-add", "Add embeddings to an index");
    index_add->add_option("--db", ia.db)->required();
    index_add->add_option("--embeddings", ia.embeddings)->required()->check(CLI::ExistingFile);

    SearchArgs se;
    auto* searchc = app.add_subcommand("search", "Rank indexed functions by similarity");
    searchc->add_option("--db", se.db)->required()->check(CLI::ExistingFile);
    searchc->add_option("--query", se.query, "SSG JSON or bytecode hex")->required()->check(CLI::ExistingFile);
    searchc->add_option("--model", se.model)->required()->check(CLI::ExistingFile);
    searchc->add_option("--function", se.function, "Selector of a hex query");
    searchc->add_option("--top-k", se.top_k)->capture_default_str();
    searchc->add_option("--format", se.format)->check(CLI::IsMember({"text", "json"}))->capture_default_str();

    EvalArgs ev;
    auto* evalc = app.add_subcommand("eval", "AUC of a model on labeled pairs");
    evalc->add_option("--pairs", ev.pairs)->required()->check(CLI::ExistingFile);
    evalc->add_option("--corpus", ev.corpus)->required()->check(CLI::ExistingFile);
    evalc->add_option("--model", ev.model)->required()->check(CLI::ExistingFile);
    evalc->add_option("--out", ev.out, "Per-pair scores CSV");
    evalc->add_option("--histogram", ev.histogram, "Score histogram CSV");
    evalc->add_option("--bins", ev.bins)->capture_default_str()->check(CLI::PositiveNumber);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    Log log(g, err);
    try {
        if (*extract)
            return cmd_extract(ex, g, log, out);
        if (*export_dot)
            return cmd_export_dot(dot, out);
        if (*synth)
            return cmd_synth(sy, g, out);
        if (*split)
            return cmd_split(sp, g, out);
        if (*pairs)
            return cmd_pairs(pa, g, out);
        if (*trainc)
            return cmd_train(tr, g, log, out);
        if (*embedc)
            return cmd_embed(em, out);
        if (*index_add)
            return cmd_index_add(ia, out);
        if (*searchc)
            return cmd_search(se, log, out);
        if (*evalc)
            return cmd_eval(ev, out);
    } catch (const Error& e) {
        log.error(e.what());
        return kExitInvalid;
    } catch (const std::exception& e) {
        log.error(e.what());
        return kExitInvalid;
    }
    return kExitInvalid;
}

}  // namespace ssgsim::cli
