// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "ssgsim/dataset.hpp"

#include "ssgsim/assembler.hpp"
#include "ssgsim/error.hpp"
#include "ssgsim/io.hpp"
#include "ssgsim/opcodes.hpp"
#include "ssgsim/random.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string_view>
#include <tuple>

namespace ssgsim {

// --- split and pairs --------------------------------------------------------

CorpusSplit split_corpus(const std::vector<CorpusEntry>& entries, std::uint64_t seed)
{
    std::vector<std::string> classes;
    for (const auto& e : entries)
        classes.push_back(e.source_function_id);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() < 10)
        throw Error(ErrorCode::TooFewClasses,
                    "need at least 10 classes to split, got " + std::to_string(classes.size()));

    auto rng = sub_generator(seed, "split");
    std::shuffle(classes.begin(), classes.end(), rng);
    const std::size_t n = classes.size();
    const std::size_t n_val = n * 2 / 10;
    const std::size_t n_test = n / 10;

    std::map<std::string, int> part;
    for (std::size_t i = 0; i < n; ++i)
        part[classes[i]] = i < n_val ? 1 : i < n_val + n_test ? 2 : 0;

    CorpusSplit s;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        switch (part[entries[i].source_function_id]) {
        case 0: s.train.push_back(i); break;
        case 1: s.val.push_back(i); break;
        default: s.test.push_back(i); break;
        }
    }
    return s;
}

std::vector<LabeledPair> all_pairs(const std::vector<CorpusEntry>& entries, const std::vector<std::size_t>& subset)
{
    std::vector<LabeledPair> out;
    for (std::size_t i = 0; i < subset.size(); ++i) {
        for (std::size_t j = i + 1; j < subset.size(); ++j) {
            const bool same = entries[subset[i]].source_function_id == entries[subset[j]].source_function_id;
            out.push_back({subset[i], subset[j], same ? 1 : -1});
        }
    }
    return out;
}

std::vector<LabeledPair> make_pairs(const std::vector<CorpusEntry>& entries, const std::vector<std::size_t>& subset,
                                    std::size_t n_pos, std::size_t n_neg, std::uint64_t seed)
{
    std::vector<std::size_t> idx(subset);
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());

    std::map<std::string, std::vector<std::size_t>> by_class;
    for (auto i : idx)
        by_class[entries[i].source_function_id].push_back(i);

    std::vector<LabeledPair> positives;
    for (const auto& [cls, members] : by_class) {
        for (std::size_t i = 0; i < members.size(); ++i) {
            for (std::size_t j = i + 1; j < members.size(); ++j)
                positives.push_back({members[i], members[j], 1});
        }
    }
    const std::size_t total = idx.size() * (idx.size() - (idx.empty() ? 0 : 1)) / 2;
    const std::size_t negatives_available = total - positives.size();
    if (n_pos > positives.size())
        throw Error(ErrorCode::InsufficientVariants, "requested " + std::to_string(n_pos) + " similar pairs but only " +
                                                         std::to_string(positives.size()) + " exist");
    if (n_neg > negatives_available)
        throw Error(ErrorCode::InsufficientVariants, "requested " + std::to_string(n_neg) +
                                                         " dissimilar pairs but only " +
                                                         std::to_string(negatives_available) + " exist");

    auto rng = sub_generator(seed, "pairs");
    std::shuffle(positives.begin(), positives.end(), rng);
    positives.resize(n_pos);

    std::vector<LabeledPair> negatives;
    if (negatives_available <= 4 * n_neg || negatives_available <= 200000) {
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::size_t j = i + 1; j < idx.size(); ++j) {
                if (entries[idx[i]].source_function_id != entries[idx[j]].source_function_id)
                    negatives.push_back({idx[i], idx[j], -1});
            }
        }
        std::shuffle(negatives.begin(), negatives.end(), rng);
        negatives.resize(n_neg);
    } else {
        // Rejection sampling keeps memory bounded for large corpora.
        std::set<std::pair<std::size_t, std::size_t>> seen;
        std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
        while (negatives.size() < n_neg) {
            std::size_t a = idx[pick(rng)];
            std::size_t b = idx[pick(rng)];
            if (a == b || entries[a].source_function_id == entries[b].source_function_id)
                continue;
            if (a > b)
                std::swap(a, b);
            if (seen.insert({a, b}).second)
                negatives.push_back({a, b, -1});
        }
    }

    std::vector<LabeledPair> out = std::move(positives);
    out.insert(out.end(), negatives.begin(), negatives.end());
    return out;
}

// --- synthetic corpus -------------------------------------------------------

namespace {

enum class MathChecks { None, Panic, SafeMath, SafeMathBare };

struct Style {
    MathChecks math = MathChecks::None;
    bool callvalue_check = false;
    bool abi_checks = false;
    bool validate_each_use = false;
    bool address_mask = false;
    bool revert_strings = false;
    bool dup_sload = false;
    bool reorder_blocks = false;
    bool wide_push = false;
    bool stack_nops = false;
    bool div_selector = false;
};

Style style_for(std::size_t variant, std::uint64_t seed)
{
    Style s;
    switch (variant) {
    case 0: break;
    case 1:
        s.math = MathChecks::Panic;
        s.callvalue_check = s.abi_checks = s.revert_strings = s.wide_push = true;
        break;
    case 2:
        s.math = MathChecks::SafeMath;
        s.address_mask = s.dup_sload = s.reorder_blocks = s.stack_nops = s.validate_each_use = true;
        break;
    case 3:
        s.math = MathChecks::SafeMathBare;
        s.callvalue_check = s.address_mask = s.revert_strings = s.dup_sload = s.reorder_blocks = true;
        s.div_selector = s.validate_each_use = true;
        break;
    default: {
        auto rng = sub_generator(seed, "style-" + std::to_string(variant));
        std::bernoulli_distribution coin(0.5);
        s.math = static_cast<MathChecks>(rng() % 4);
        for (bool* b : {&s.callvalue_check, &s.abi_checks, &s.validate_each_use, &s.address_mask, &s.revert_strings,
                        &s.dup_sload, &s.reorder_blocks, &s.wide_push, &s.stack_nops, &s.div_selector})
            *b = coin(rng);
        break;
    }
    }
    return s;
}

struct Expr {
    enum Kind { Const, Arg, Env, Sload, MapSlot, Add, Sub, Gt, Eq, ReturnWord } kind = Const;
    Word value;
    int arg = 0;
    std::uint8_t op = 0;
    std::vector<Expr> kids;
};

Expr e_const(Word w)
{
    Expr e;
    e.kind = Expr::Const;
    e.value = w;
    return e;
}
Expr e_arg(int i)
{
    Expr e;
    e.kind = Expr::Arg;
    e.arg = i;
    return e;
}
Expr e_env(std::uint8_t op)
{
    Expr e;
    e.kind = Expr::Env;
    e.op = op;
    return e;
}
Expr e_unary(Expr::Kind k, Expr a)
{
    Expr e;
    e.kind = k;
    e.kids = {std::move(a)};
    return e;
}
Expr e_binary(Expr::Kind k, Expr a, Expr b)
{
    Expr e;
    e.kind = k;
    e.kids = {std::move(a), std::move(b)};
    return e;
}
Expr e_map(Expr key, std::uint64_t slot)
{
    Expr e = e_unary(Expr::MapSlot, std::move(key));
    e.value = Word{slot};
    return e;
}

struct Stmt {
    enum Kind { Store, Log, Call, Require } kind = Store;
    std::vector<Expr> ops;  // Store: slot, value; Log: data, topics...; Call: address, arg; Require: cond
    Word aux;  // Call selector, Require message
    std::size_t aux_len = 0;
};

struct SourceFunction {
    std::uint32_t selector = 0;
    std::vector<bool> arg_is_address;
    std::vector<Stmt> body;
    std::optional<Expr> result;  // RETURN of one word, STOP when empty
};

Word random_word(std::mt19937_64& rng)
{
    std::array<std::uint8_t, 32> b{};
    for (auto& x : b)
        x = static_cast<std::uint8_t>(rng());
    return Word::from_be_bytes(b);
}

/// Constants drawn from a small shared pool, as real code reuses common
/// event topics, callee selectors and error messages.
struct Vocabulary {
    std::vector<Word> topics;
    std::vector<std::uint32_t> callees;
    std::vector<std::pair<Word, std::size_t>> messages;

    explicit Vocabulary(std::uint64_t seed)
    {
        auto rng = sub_generator(seed, "synth-vocabulary");
        for (int i = 0; i < 8; ++i) {
            topics.push_back(random_word(rng));
            callees.push_back(static_cast<std::uint32_t>(rng()));
            const std::size_t len = 6 + rng() % 25;
            std::array<std::uint8_t, 32> msg{};
            for (std::size_t k = 0; k < len; ++k)
                msg[k] = static_cast<std::uint8_t>('a' + rng() % 26);
            messages.emplace_back(Word::from_be_bytes(msg), len);
        }
    }
};

/// Statement shapes come from `shape`, shared by every class of a family;
/// constants (slots, bounds, topics, callees, messages) come from `detail`.
SourceFunction random_function(std::mt19937_64& shape, std::mt19937_64& detail, const Vocabulary& vocab)
{
    auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(shape); };
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(detail); };
    SourceFunction f;
    f.selector = static_cast<std::uint32_t>(detail());
    const int nargs = uni(1, 3);
    for (int i = 0; i < nargs; ++i)
        f.arg_is_address.push_back(uni(0, 1) == 1);
    auto any_arg = [&] { return e_arg(uni(0, nargs - 1)); };
    auto slot = [&] { return static_cast<std::uint64_t>(pick(0, 15)); };
    auto key = [&]() { return uni(0, 1) ? e_env(OP_CALLER) : any_arg(); };
    auto value = [&]() {
        if (uni(0, 4) > 1)
            return any_arg();
        return e_binary(uni(0, 1) ? Expr::Add : Expr::Sub, any_arg(), e_const(Word{static_cast<std::uint64_t>(pick(1, 500))}));
    };
    static constexpr std::array<std::uint8_t, 4> kEnv = {OP_CALLER, OP_TIMESTAMP, OP_NUMBER, OP_ORIGIN};

    const int n = uni(2, 5);
    for (int i = 0; i < n; ++i) {
        Stmt s;
        switch (uni(0, 7)) {
        case 0:
            s.kind = Stmt::Store;
            s.ops = {e_const(Word{slot()}), uni(0, 2) ? value() : e_env(kEnv[static_cast<std::size_t>(uni(0, 3))])};
            break;
        case 1:
            s.kind = Stmt::Store;
            s.ops = {e_map(key(), slot()), value()};
            break;
        case 2: {
            s.kind = Stmt::Store;
            Expr sl = uni(0, 1) ? e_const(Word{slot()}) : e_map(key(), slot());
            Expr cur = e_unary(Expr::Sload, sl);
            s.ops = {sl, e_binary(uni(0, 1) ? Expr::Add : Expr::Sub, cur, any_arg())};
            break;
        }
        case 3:
        case 4: {
            s.kind = Stmt::Log;
            s.ops = {any_arg(), e_const(vocab.topics[static_cast<std::size_t>(uni(0, 7))])};
            const int extra = uni(0, 2);
            for (int t = 0; t < extra; ++t)
                s.ops.push_back(uni(0, 1) ? e_env(OP_CALLER) : any_arg());
            break;
        }
        case 5: {
            s.kind = Stmt::Call;
            Expr addr = uni(0, 1) ? any_arg() : e_unary(Expr::Sload, e_const(Word{slot()}));
            s.ops = {addr, any_arg()};
            s.aux = Word{vocab.callees[static_cast<std::size_t>(uni(0, 7))]};
            break;
        }
        default: {
            s.kind = Stmt::Require;
            if (uni(0, 1))
                s.ops = {e_binary(Expr::Gt, any_arg(), e_const(Word{static_cast<std::uint64_t>(pick(0, 1000))}))};
            else
                s.ops = {e_binary(Expr::Eq, e_env(OP_CALLER), e_unary(Expr::Sload, e_const(Word{slot()})))};
            std::tie(s.aux, s.aux_len) = vocab.messages[static_cast<std::size_t>(uni(0, 7))];
            break;
        }
        }
        f.body.push_back(std::move(s));
    }
    switch (uni(0, 2)) {
    case 0: f.result = e_const(Word{1}); break;
    case 1: f.result = e_unary(Expr::Sload, e_const(Word{slot()})); break;
    default: break;
    }
    return f;
}

/// Lowers a source function under one style.
class Compiler {
public:
    Compiler(const SourceFunction& fn, const Style& style, std::mt19937_64& rng) : fn_(fn), style_(style), rng_(rng) {}

    std::vector<std::uint8_t> compile()
    {
        dispatcher();
        a_.label("fn");
        if (style_.callvalue_check) {
            a_.op(OP_CALLVALUE).op(OP_DUP1).op(OP_ISZERO);
            guard_jumpi([&] { a_.push(0).op(OP_DUP1).op(OP_REVERT); });
            a_.op(OP_POP);
        }
        if (style_.abi_checks)
            abi_checks();

        std::vector<std::string> chunks;
        for (std::size_t i = 0; i < fn_.body.size(); ++i)
            chunks.push_back("stmt" + std::to_string(i));
        chunks.push_back("end");

        std::vector<std::size_t> order(chunks.size());
        std::iota(order.begin(), order.end(), 0);
        if (style_.reorder_blocks) {
            std::shuffle(order.begin(), order.end(), rng_);
            a_.push_label(chunks[0]).op(OP_JUMP);
        }
        for (std::size_t k : order) {
            a_.label(chunks[k]);
            if (k + 1 < chunks.size()) {
                statement(fn_.body[k]);
                nops();
                if (style_.reorder_blocks)
                    a_.push_label(chunks[k + 1]).op(OP_JUMP);
            } else {
                finish();
            }
        }
        return a_.assemble();
    }

private:
    void push(const Word& w) { a_.push(w, style_.wide_push ? 32 : 0); }

    std::string fresh(const char* stem) { return std::string(stem) + std::to_string(labels_++); }

    /// Jumps over `fail` when the condition on the stack is non-zero.
    template <typename F>
    void guard_jumpi(F&& fail)
    {
        const std::string ok = fresh("ok");
        a_.push_label(ok).op(OP_JUMPI);
        fail();
        a_.label(ok);
    }

    void nops()
    {
        if (!style_.stack_nops)
            return;
        switch (rng_() % 3) {
        case 0: a_.push(0).op(OP_POP); break;
        case 1: a_.op(OP_DUP1).op(OP_POP); break;
        default: a_.push(7).push(9).op(OP_SWAP1).op(OP_POP).op(OP_POP); break;
        }
    }

    void dispatcher()
    {
        push(Word{0x80});
        push(Word{0x40});
        a_.op(OP_MSTORE);
        push(Word{4});
        a_.op(OP_CALLDATASIZE).op(OP_LT).push_label("fallback").op(OP_JUMPI);
        if (style_.div_selector) {
            a_.push(Word{1} << 224, 29).push(0).op(OP_CALLDATALOAD).op(OP_DIV).push(Word{0xffffffffULL}, 4).op(OP_AND);
        } else {
            a_.push(0).op(OP_CALLDATALOAD).push(0xe0).op(OP_SHR);
        }
        a_.op(OP_DUP1).push(Word{fn_.selector}, 4).op(OP_EQ).push_label("fn").op(OP_JUMPI);
        a_.label("fallback").push(0).op(OP_DUP1).op(OP_REVERT);
    }

    void abi_checks()
    {
        push(Word{32 * fn_.arg_is_address.size()});
        push(Word{4});
        a_.op(OP_CALLDATASIZE).op(OP_SUB).op(OP_SLT).op(OP_ISZERO);
        guard_jumpi([&] { a_.push(0).op(OP_DUP1).op(OP_REVERT); });
        for (std::size_t i = 0; i < fn_.arg_is_address.size(); ++i) {
            if (!fn_.arg_is_address[i])
                continue;
            push(Word{4 + 32 * i});
            a_.op(OP_CALLDATALOAD).op(OP_DUP1);
            push((Word{1} << 160) - Word{1});
            a_.op(OP_AND).op(OP_EQ);
            guard_jumpi([&] { a_.push(0).op(OP_DUP1).op(OP_REVERT); });
        }
    }

    void overflow(bool add)
    {
        switch (style_.math) {
        case MathChecks::Panic: panic(0x11); break;
        case MathChecks::SafeMath:
            error_string(add ? "SafeMath: addition overflow" : "SafeMath: subtraction overflow");
            break;
        default: a_.push(0).op(OP_DUP1).op(OP_REVERT); break;
        }
    }

    /// revert Error(string) for messages of at most 32 bytes.
    void error_string(std::string_view msg)
    {
        std::array<std::uint8_t, 32> text{};
        std::copy(msg.begin(), msg.end(), text.begin());
        error_string(Word::from_be_bytes(text), msg.size());
    }

    void error_string(const Word& text, std::size_t len)
    {
        push(Word{0x08c379a0} << 224);
        push(Word{0x80});
        a_.op(OP_MSTORE);
        push(Word{0x20});
        push(Word{0x84});
        a_.op(OP_MSTORE);
        push(Word{len});
        push(Word{0xa4});
        a_.op(OP_MSTORE);
        push(text);
        push(Word{0xc4});
        a_.op(OP_MSTORE);
        push(Word{0x64});
        push(Word{0x80});
        a_.op(OP_REVERT);
    }

    void panic(std::uint64_t code)
    {
        push(Word{0x4e487b71} << 224);
        push(Word{0});
        a_.op(OP_MSTORE);
        push(Word{code});
        push(Word{4});
        a_.op(OP_MSTORE);
        push(Word{0x24});
        push(Word{0});
        a_.op(OP_REVERT);
    }

    void expr(const Expr& e)
    {
        switch (e.kind) {
        case Expr::Const: push(e.value); break;
        case Expr::Arg:
            push(Word{4 + 32 * static_cast<std::uint64_t>(e.arg)});
            a_.op(OP_CALLDATALOAD);
            if (fn_.arg_is_address[static_cast<std::size_t>(e.arg)]) {
                if (style_.validate_each_use) {
                    a_.op(OP_DUP1);
                    push((Word{1} << 160) - Word{1});
                    a_.op(OP_AND).op(OP_DUP2).op(OP_EQ);
                    guard_jumpi([&] { a_.push(0).op(OP_DUP1).op(OP_REVERT); });
                }
                if (style_.address_mask) {
                    push((Word{1} << 160) - Word{1});
                    a_.op(OP_AND);
                }
            }
            break;
        case Expr::Env: a_.op(e.op); break;
        case Expr::Sload:
            if (style_.dup_sload) {
                expr(e.kids[0]);
                a_.op(OP_SLOAD).op(OP_POP);
            }
            expr(e.kids[0]);
            a_.op(OP_SLOAD);
            break;
        case Expr::MapSlot:
            expr(e.kids[0]);
            push(Word{0});
            a_.op(OP_MSTORE);
            push(e.value);
            push(Word{0x20});
            a_.op(OP_MSTORE);
            push(Word{0x40});
            push(Word{0});
            a_.op(OP_KECCAK256);
            break;
        case Expr::Add:
        case Expr::Sub:
            expr(e.kids[1]);
            expr(e.kids[0]);
            if (style_.math != MathChecks::None) {
                // stack: a b
                if (e.kind == Expr::Add)
                    a_.op(OP_DUP2).op(OP_NOT).op(OP_DUP2).op(OP_GT).op(OP_ISZERO);
                else
                    a_.op(OP_DUP2).op(OP_DUP2).op(OP_LT).op(OP_ISZERO);
                guard_jumpi([&] { overflow(e.kind == Expr::Add); });
            }
            a_.op(e.kind == Expr::Add ? OP_ADD : OP_SUB);
            break;
        case Expr::Gt:
        case Expr::Eq:
            expr(e.kids[1]);
            expr(e.kids[0]);
            a_.op(e.kind == Expr::Gt ? OP_GT : OP_EQ);
            break;
        case Expr::ReturnWord:
            push(Word{0});
            a_.op(OP_MLOAD);
            break;
        }
    }

    void statement(const Stmt& s)
    {
        switch (s.kind) {
        case Stmt::Store:
            expr(s.ops[1]);
            expr(s.ops[0]);
            a_.op(OP_SSTORE);
            break;
        case Stmt::Log: {
            expr(s.ops[0]);
            push(Word{0x80});
            a_.op(OP_MSTORE);
            for (std::size_t t = s.ops.size(); t-- > 1;)
                expr(s.ops[t]);
            push(Word{0x20});
            push(Word{0x80});
            a_.op(static_cast<std::uint8_t>(OP_LOG0 + s.ops.size() - 1));
            break;
        }
        case Stmt::Call:
            push(s.aux << 224);
            push(Word{0x80});
            a_.op(OP_MSTORE);
            expr(s.ops[1]);
            push(Word{0x84});
            a_.op(OP_MSTORE);
            push(Word{0x20});
            push(Word{0});
            push(Word{0x24});
            push(Word{0x80});
            push(Word{0});
            expr(s.ops[0]);
            a_.op(OP_GAS).op(OP_CALL);
            guard_jumpi([&] { a_.push(0).op(OP_DUP1).op(OP_REVERT); });
            break;
        case Stmt::Require:
            expr(s.ops[0]);
            guard_jumpi([&] {
                if (style_.revert_strings)
                    error_string(s.aux, s.aux_len);
                else
                    a_.push(0).op(OP_DUP1).op(OP_REVERT);
            });
            break;
        }
    }

    void finish()
    {
        if (!fn_.result) {
            a_.op(OP_STOP);
            return;
        }
        expr(*fn_.result);
        push(Word{0x80});
        a_.op(OP_MSTORE);
        push(Word{0x20});
        push(Word{0x80});
        a_.op(OP_RETURN);
    }

    const SourceFunction& fn_;
    const Style& style_;
    std::mt19937_64& rng_;
    Assembler a_;
    int labels_ = 0;
};

std::string class_id(std::size_t i)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "fn%03zu", i);
    return buf;
}

}  // namespace

std::vector<SynthContract> generate_synthetic(const SynthConfig& cfg)
{
    std::vector<SynthContract> out;
    const Vocabulary vocab(cfg.seed);
    for (std::size_t c = 0; c < cfg.classes; ++c) {
        auto shape_rng = sub_generator(cfg.seed, "synth-family-" + std::to_string(c % std::max<std::size_t>(cfg.families, 1)));
        auto fn_rng = sub_generator(cfg.seed, "synth-class-" + std::to_string(c));
        SourceFunction fn = random_function(shape_rng, fn_rng, vocab);
        for (std::size_t v = 0; v < cfg.variants; ++v) {
            Style style = style_for(v, cfg.seed);
            auto layout_rng = sub_generator(cfg.seed, "synth-layout-" + std::to_string(c) + "-" + std::to_string(v));
            Compiler comp(fn, style, layout_rng);
            SynthContract sc;
            sc.source_function_id = class_id(c);
            sc.variant_id = "v" + std::to_string(v);
            sc.selector = fn.selector;
            sc.code = Bytecode{comp.compile(), sc.source_function_id + "." + sc.variant_id};
            out.push_back(std::move(sc));
        }
    }
    return out;
}

std::vector<CorpusEntry> build_synthetic_corpus(const SynthConfig& cfg)
{
    std::vector<CorpusEntry> out;
    for (const auto& sc : generate_synthetic(cfg)) {
        Program program(sc.code);
        DispatchInfo dispatch = analyze_dispatcher(program);
        out.push_back({sc.source_function_id, sc.variant_id, extract_ssg(program, dispatch, FunctionId::of(sc.selector))});
    }
    return out;
}

// --- files ------------------------------------------------------------------

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries) {
        arr.push_back(
            {{"id", e.id}, {"source", e.source_function_id}, {"variant", e.variant_id}, {"ssg", e.ssg_path}});
    }
    write_file_atomic(path, nlohmann::json{{"entries", std::move(arr)}}.dump(2) + "\n");
}

std::vector<ManifestEntry> read_manifest(const std::string& path)
{
    nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.contains("entries") || !j["entries"].is_array())
        throw Error(ErrorCode::IoError, path + " is not a corpus manifest");
    std::vector<ManifestEntry> out;
    std::set<std::string> ids;
    try {
        for (const auto& e : j["entries"]) {
            ManifestEntry m;
            m.id = e.at("id").get<std::string>();
            m.source_function_id = e.at("source").get<std::string>();
            m.variant_id = e.value("variant", std::string{});
            m.ssg_path = e.at("ssg").get<std::string>();
            if (!ids.insert(m.id).second)
                throw Error(ErrorCode::IoError, path + ": duplicate id " + m.id);
            out.push_back(std::move(m));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::IoError, path + ": " + e.what());
    }
    return out;
}

std::vector<CorpusEntry> load_corpus(const std::string& manifest_path)
{
    const auto base = std::filesystem::path(manifest_path).parent_path();
    std::vector<CorpusEntry> out;
    for (const auto& m : read_manifest(manifest_path)) {
        std::filesystem::path p(m.ssg_path);
        if (p.is_relative())
            p = base / p;
        nlohmann::json j = nlohmann::json::parse(read_file(p.string()), nullptr, false);
        if (j.is_discarded())
            throw Error(ErrorCode::InvalidSsg, p.string() + " is not valid JSON");
        out.push_back({m.source_function_id, m.variant_id, ssg_from_json(j)});
    }
    return out;
}

void write_pairs(const std::string& path, const std::vector<KeyedPair>& pairs)
{
    std::ostringstream out;
    for (const auto& p : pairs)
        out << nlohmann::json{{"a", p.a}, {"b", p.b}, {"y", p.y}}.dump() << "\n";
    write_file_atomic(path, out.str());
}

std::vector<KeyedPair> read_pairs(const std::string& path)
{
    std::istringstream in(read_file(path));
    std::vector<KeyedPair> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        try {
            if (j.is_discarded())
                throw Error(ErrorCode::IoError, "");
            KeyedPair p{j.at("a").get<std::string>(), j.at("b").get<std::string>(), j.at("y").get<int>()};
            if (p.y != 1 && p.y != -1)
                throw Error(ErrorCode::IoError, "");
            out.push_back(std::move(p));
        } catch (const std::exception&) {
            throw Error(ErrorCode::IoError, path + ":" + std::to_string(lineno) + ": malformed pair");
        }
    }
    return out;
}

}  // namespace ssgsim
