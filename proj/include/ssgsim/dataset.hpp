// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#pragma once

#include "ssgsim/bytecode.hpp"
#include "ssgsim/metrics.hpp"
#include "ssgsim/ssg.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ssgsim {

struct CorpusEntry {
    std::string source_function_id;  // similarity class
    std::string variant_id;
    Ssg ssg;

    /// "<source>.<variant>", the id used by manifests and pairs files.
    std::string key() const { return source_function_id + "." + variant_id; }
};

struct CorpusSplit {
    std::vector<std::size_t> train, val, test;  // entry indices
};

/// Class-level 70/20/10 split (val and test sizes rounded down, remainder to
/// train), shuffled with the "split" sub-generator.
/// Throws Error{TooFewClasses} below 10 distinct classes.
CorpusSplit split_corpus(const std::vector<CorpusEntry>& entries, std::uint64_t seed);

struct LabeledPair {
    std::size_t a = 0;
    std::size_t b = 0;
    int y = 1;  // +1 same class, -1 different
};

/// n_pos intra-class and n_neg inter-class pairs drawn without repetition
/// (unordered) from the given entry indices with the "pairs" sub-generator.
/// Throws Error{InsufficientVariants} when fewer pairs exist than requested.
std::vector<LabeledPair> make_pairs(const std::vector<CorpusEntry>& entries, const std::vector<std::size_t>& subset,
                                    std::size_t n_pos, std::size_t n_neg, std::uint64_t seed);

/// Every unordered pair of the subset, labeled.
std::vector<LabeledPair> all_pairs(const std::vector<CorpusEntry>& entries, const std::vector<std::size_t>& subset);

// --- synthetic corpus -------------------------------------------------------

struct SynthConfig {
    std::size_t classes = 24;
    std::size_t variants = 4;
    /// Classes of one family share statement shapes and differ in constants
    /// (slots, bounds, offsets, selector), so structure alone cannot tell
    /// them apart.
    std::size_t families = 1;
    std::uint64_t seed = 0;
};

struct SynthContract {
    std::string source_function_id;
    std::string variant_id;
    std::uint32_t selector = 0;
    Bytecode code;
};

/// Random source functions, each compiled under several code-generation
/// styles. Styles mimic compiler differences: checked arithmetic, ABI and
/// call-value guards, revert strings, redundant loads, address masking,
/// block order, PUSH widths and stack no-ops. Style i is the same for every
/// class, so style-induced structure is shared across classes.
std::vector<SynthContract> generate_synthetic(const SynthConfig& cfg);

/// Extracts the generated function of each contract.
std::vector<CorpusEntry> build_synthetic_corpus(const SynthConfig& cfg);

// --- files ------------------------------------------------------------------

struct ManifestEntry {
    std::string id;
    std::string source_function_id;
    std::string variant_id;
    std::string ssg_path;  // relative paths resolve against the manifest's directory
};

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);
/// Loads every SSG a manifest refers to. Throws Error{IoError, InvalidSsg}.
std::vector<CorpusEntry> load_corpus(const std::string& manifest_path);

struct KeyedPair {
    std::string a;
    std::string b;
    int y = 1;
};

/// JSON lines: {"a": "...", "b": "...", "y": 1|-1}.
void write_pairs(const std::string& path, const std::vector<KeyedPair>& pairs);
std::vector<KeyedPair> read_pairs(const std::string& path);

}  // namespace ssgsim
