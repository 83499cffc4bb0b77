// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "ssgsim/dataflow.hpp"

#include "ssgsim/opcodes.hpp"

#include <algorithm>
#include <deque>

namespace ssgsim {

// --- memory model ----------------------------------------------------------

void Memory::write(std::uint64_t offset, std::uint64_t length, DefId writer, std::optional<Word> value)
{
    if (length == 0)
        return;
    if (offset >= kMaxTrackedOffset || length > kMaxTrackedWrite) {
        clobber();
        return;
    }
    std::array<std::uint8_t, 32> bytes{};
    if (value)
        bytes = value->to_be_bytes();
    for (std::uint64_t i = 0; i < length; ++i) {
        Cell& c = cells_[offset + i];
        c.writers.assign(1, writer);
        // Only full-word stores carry byte values.
        c.byte = (value && length == 32) ? static_cast<std::int16_t>(bytes[i]) : std::int16_t{-1};
    }
}

void Memory::write_byte(std::uint64_t offset, DefId writer, std::optional<std::uint8_t> value)
{
    if (offset >= kMaxTrackedOffset) {
        clobber();
        return;
    }
    Cell& c = cells_[offset];
    c.writers.assign(1, writer);
    c.byte = value ? static_cast<std::int16_t>(*value) : std::int16_t{-1};
}

void Memory::clobber()
{
    cells_.clear();
    clobbered_ = true;
}

MemoryRead Memory::read(std::uint64_t offset, std::uint64_t length) const
{
    MemoryRead r;
    r.start = offset;
    r.length = length;
    if (length == 0)
        return r;
    if (offset >= kMaxTrackedOffset || length > kMaxTrackedWrite) {
        r.unknown = true;
        return r;
    }

    std::array<std::uint8_t, 32> bytes{};
    bool all_known = length <= 32;
    auto it = cells_.lower_bound(offset);
    for (std::uint64_t i = 0; i < length; ++i) {
        std::uint64_t pos = offset + i;
        while (it != cells_.end() && it->first < pos)
            ++it;
        if (it != cells_.end() && it->first == pos) {
            for (DefId w : it->second.writers) {
                bool seen = std::any_of(r.writers.begin(), r.writers.end(), [w](const auto& p) { return p.first == w; });
                if (!seen)
                    r.writers.emplace_back(w, pos);
            }
            if (it->second.byte < 0)
                all_known = false;
            else if (length <= 32)
                bytes[i] = static_cast<std::uint8_t>(it->second.byte);
        } else if (clobbered_) {
            r.unknown = true;
            all_known = false;
        }
        // untouched, unclobbered memory reads as zero
    }
    if (all_known)
        r.constant = Word::from_be_bytes(std::span<const std::uint8_t>(bytes.data(), static_cast<std::size_t>(length)));
    std::sort(r.writers.begin(), r.writers.end());
    return r;
}

bool Memory::join(const Memory& other)
{
    bool changed = false;
    const bool was_clobbered = clobbered_;
    if (other.clobbered_ && !clobbered_) {
        clobbered_ = true;
        changed = true;
    }
    auto absent_byte = [](bool clobbered) { return clobbered ? std::int16_t{-1} : std::int16_t{0}; };

    // Cells only on this side: the other side holds zero or unknown there.
    for (auto& [pos, cell] : cells_) {
        if (other.cells_.contains(pos))
            continue;
        std::int16_t b = absent_byte(other.clobbered_);
        if (cell.byte != b && cell.byte != -1) {
            cell.byte = -1;
            changed = true;
        }
    }
    for (const auto& [pos, ocell] : other.cells_) {
        auto it = cells_.find(pos);
        if (it == cells_.end()) {
            Cell c = ocell;
            if (c.byte != absent_byte(was_clobbered) && c.byte != -1)
                c.byte = -1;
            cells_.emplace(pos, std::move(c));
            changed = true;
            continue;
        }
        Cell& c = it->second;
        std::vector<DefId> merged;
        std::set_union(c.writers.begin(), c.writers.end(), ocell.writers.begin(), ocell.writers.end(),
                       std::back_inserter(merged));
        if (merged != c.writers) {
            c.writers = std::move(merged);
            changed = true;
        }
        if (c.byte != ocell.byte && c.byte != -1) {
            c.byte = -1;
            changed = true;
        }
    }
    return changed;
}

// --- value flow ------------------------------------------------------------

namespace {

bool is_pure(std::uint8_t op)
{
    return (op >= OP_ADD && op <= OP_SIGNEXTEND) || (op >= OP_LT && op <= OP_SAR);
}

std::optional<Word> fold(std::uint8_t op, const std::vector<Value>& in)
{
    auto c = [&](std::size_t i) -> const std::optional<Word>& { return in[i].constant; };
    for (const auto& v : in) {
        if (!v.constant)
            return std::nullopt;
    }
    const Word& a = *c(0);
    switch (op) {
    case OP_ADD: return a + *c(1);
    case OP_SUB: return a - *c(1);
    case OP_MUL: return a * *c(1);
    case OP_DIV:
    case OP_MOD: {
        const Word& b = *c(1);
        if (!a.fits_u64() || !b.fits_u64())
            return std::nullopt;
        if (b.is_zero())
            return Word{};
        return Word{op == OP_DIV ? a.low_u64() / b.low_u64() : a.low_u64() % b.low_u64()};
    }
    case OP_LT: return Word{a < *c(1) ? 1u : 0u};
    case OP_GT: return Word{a > *c(1) ? 1u : 0u};
    case OP_EQ: return Word{a == *c(1) ? 1u : 0u};
    case OP_ISZERO: return Word{a.is_zero() ? 1u : 0u};
    case OP_AND: return a & *c(1);
    case OP_OR: return a | *c(1);
    case OP_XOR: return a ^ *c(1);
    case OP_NOT: return ~a;
    case OP_SHL:
    case OP_SHR: {
        const Word& v = *c(1);
        unsigned s = a.fits_u64() && a.low_u64() < 256 ? static_cast<unsigned>(a.low_u64()) : 256;
        return op == OP_SHL ? v << s : v >> s;
    }
    default: return std::nullopt;
    }
}

Value join_value(const Value& a, const Value& b)
{
    Value out;
    std::set_union(a.defs.begin(), a.defs.end(), b.defs.begin(), b.defs.end(), std::back_inserter(out.defs));
    if (a.constant == b.constant)
        out.constant = a.constant;
    return out;
}

std::optional<std::uint64_t> small(const Value& v)
{
    if (v.constant && v.constant->fits_u64())
        return v.constant->low_u64();
    return std::nullopt;
}

}  // namespace

struct ValueFlow::State {
    static constexpr std::size_t kMaxDepth = 1024;

    std::vector<Value> stack;  // bottom first
    Memory memory;

    Value pop()
    {
        if (stack.empty())
            return {};
        Value v = std::move(stack.back());
        stack.pop_back();
        return v;
    }

    void push(Value v)
    {
        if (stack.size() == kMaxDepth)
            stack.erase(stack.begin());
        stack.push_back(std::move(v));
    }

    Value peek(std::size_t n) const { return n < stack.size() ? stack[stack.size() - 1 - n] : Value{}; }

    bool join(const State& other)
    {
        bool changed = false;
        std::size_t n = std::max(stack.size(), other.stack.size());
        std::vector<Value> merged(n);
        for (std::size_t i = 0; i < n; ++i) {
            // top-aligned
            Value a = peek(i);
            Value b = other.peek(i);
            merged[n - 1 - i] = (i < stack.size() && i < other.stack.size()) ? join_value(a, b)
                                : (i < stack.size())                         ? Value{a.defs, std::nullopt}
                                                                             : Value{b.defs, std::nullopt};
        }
        if (merged != stack) {
            stack = std::move(merged);
            changed = true;
        }
        changed |= memory.join(other.memory);
        return changed;
    }
};

DefId ValueFlow::def_id(const Site& site, std::uint8_t opcode, DefRole role)
{
    auto [it, inserted] = def_index_.try_emplace({site, role}, static_cast<DefId>(defs_.size()));
    if (inserted) {
        Def d;
        d.site = site;
        d.opcode = opcode;
        d.role = role;
        defs_.push_back(std::move(d));
    }
    return it->second;
}

void ValueFlow::transfer(const BasicBlock& block, BlockRef ref, State& st, bool record)
{
    for (const auto& ins : block.instructions) {
        const std::uint8_t op = ins.opcode;
        const Site site{ref, ins.offset};
        const auto& info = opcode_info(op);

        if (auto v = ins.push_value()) {
            DefId d = def_id(site, op, DefRole::Result);
            if (record)
                defs_[d].result = *v;
            st.push(Value{{d}, *v});
            continue;
        }
        if (is_dup(op)) {
            st.push(st.peek(op - OP_DUP1));
            continue;
        }
        if (is_swap(op)) {
            std::size_t n = op - OP_SWAP1 + 1u;
            while (st.stack.size() < n + 1)
                st.stack.insert(st.stack.begin(), Value{});
            std::swap(st.stack.back(), st.stack[st.stack.size() - 1 - n]);
            continue;
        }
        if (op == OP_JUMPDEST)
            continue;

        std::vector<Value> in;
        in.reserve(info.pops);
        for (unsigned i = 0; i < info.pops; ++i)
            in.push_back(st.pop());

        if (record && classify_stable(op))
            site_records_[site] = SiteRecord{in, st.memory};

        std::optional<MemoryRead> read;
        std::optional<Word> result;

        switch (op) {
        case OP_MLOAD:
            if (auto off = small(in[0])) {
                read = st.memory.read(*off, 32);
                result = read->constant;
            } else {
                read = MemoryRead{0, 32, {}, true, std::nullopt};
            }
            break;
        case OP_KECCAK256: {
            auto off = small(in[0]);
            auto len = small(in[1]);
            read = (off && len) ? st.memory.read(*off, *len) : MemoryRead{0, 0, {}, true, std::nullopt};
            break;
        }
        case OP_MSTORE:
        case OP_MSTORE8: {
            DefId w = def_id(site, op, DefRole::MemoryWrite);
            if (record)
                defs_[w].operands = in;
            if (auto off = small(in[0])) {
                if (op == OP_MSTORE) {
                    st.memory.write(*off, 32, w, in[1].constant);
                } else {
                    std::optional<std::uint8_t> b;
                    if (in[1].constant)
                        b = static_cast<std::uint8_t>(in[1].constant->low_u64() & 0xff);
                    st.memory.write_byte(*off, w, b);
                }
            } else {
                st.memory.clobber();
            }
            break;
        }
        case OP_CALLDATACOPY:
        case OP_CODECOPY:
        case OP_RETURNDATACOPY:
        case OP_EXTCODECOPY:
        case OP_MCOPY: {
            // EXTCODECOPY has the address first.
            const Value& dest = op == OP_EXTCODECOPY ? in[1] : in[0];
            const Value& size = op == OP_EXTCODECOPY ? in[3] : in[2];
            DefId w = def_id(site, op, DefRole::MemoryWrite);
            std::optional<MemoryRead> src_read;
            if (op == OP_MCOPY) {
                auto src = small(in[1]);
                auto len = small(in[2]);
                src_read = (src && len) ? st.memory.read(*src, *len) : MemoryRead{0, 0, {}, true, std::nullopt};
            }
            if (record) {
                defs_[w].operands = in;
                defs_[w].read = src_read;
            }
            auto d = small(dest);
            auto n = small(size);
            if (d && n)
                st.memory.write(*d, *n, w, std::nullopt);
            else if (!n || *n != 0)
                st.memory.clobber();
            break;
        }
        case OP_CALL:
        case OP_CALLCODE:
        case OP_DELEGATECALL:
        case OP_STATICCALL: {
            bool has_value = op == OP_CALL || op == OP_CALLCODE;
            const Value& ret_off = in[has_value ? 5 : 4];
            const Value& ret_len = in[has_value ? 6 : 5];
            DefId w = def_id(site, op, DefRole::MemoryWrite);
            if (record)
                defs_[w].operands = in;
            auto d = small(ret_off);
            auto n = small(ret_len);
            if (d && n)
                st.memory.write(*d, *n, w, std::nullopt);
            else if (!n || *n != 0)
                st.memory.clobber();
            break;
        }
        default:
            if (is_pure(op))
                result = fold(op, in);
            break;
        }

        if (info.pushes > 0) {
            DefId d = def_id(site, op, DefRole::Result);
            if (record) {
                defs_[d].operands = in;
                defs_[d].read = read;
                defs_[d].result = result;
            }
            st.push(Value{{d}, result});
        }
    }
}

ValueFlow::ValueFlow(const FunctionCfg& cfg) : cfg_(&cfg)
{
    State prefix_state;
    for (const auto& b : cfg.prefix)
        transfer(b, kPrefixBlock, prefix_state, true);
    if (cfg.nodes.empty())
        return;

    std::vector<std::optional<State>> in(cfg.nodes.size());
    in[cfg.entry] = prefix_state;

    std::vector<std::vector<BlockRef>> succ(cfg.nodes.size());
    for (const auto& [from, to] : cfg.edges)
        succ[from].push_back(to);

    std::deque<BlockRef> work{cfg.entry};
    std::vector<bool> queued(cfg.nodes.size(), false);
    queued[cfg.entry] = true;
    const std::size_t budget = 64 * cfg.nodes.size() + 1024;
    std::size_t steps = 0;
    while (!work.empty()) {
        if (steps++ >= budget) {
            budget_exceeded_ = true;
            break;
        }
        BlockRef n = work.front();
        work.pop_front();
        queued[n] = false;
        State out = *in[n];
        transfer(cfg.nodes[n].block, n, out, false);
        for (BlockRef s : succ[n]) {
            bool changed;
            if (!in[s]) {
                in[s] = out;
                changed = true;
            } else {
                changed = in[s]->join(out);
            }
            if (changed && !queued[s]) {
                queued[s] = true;
                work.push_back(s);
            }
        }
    }

    for (BlockRef n = 0; n < cfg.nodes.size(); ++n) {
        if (!in[n])
            continue;
        State st = *in[n];
        transfer(cfg.nodes[n].block, n, st, true);
    }
}

const SiteRecord* ValueFlow::site_record(const Site& site) const
{
    auto it = site_records_.find(site);
    return it == site_records_.end() ? nullptr : &it->second;
}

const Instruction* ValueFlow::instruction_at(const Site& site) const
{
    auto find_in = [&](const BasicBlock& b) -> const Instruction* {
        for (const auto& ins : b.instructions) {
            if (ins.offset == site.offset)
                return &ins;
        }
        return nullptr;
    };
    if (site.block == kPrefixBlock) {
        for (const auto& b : cfg_->prefix) {
            if (site.offset >= b.start_offset && site.offset < b.end_offset())
                return find_in(b);
        }
        return nullptr;
    }
    if (site.block >= cfg_->nodes.size())
        return nullptr;
    return find_in(cfg_->nodes[site.block].block);
}

}  // namespace ssgsim
