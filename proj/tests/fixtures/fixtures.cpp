// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "fixtures.hpp"

#include "ssgsim/assembler.hpp"
#include "ssgsim/opcodes.hpp"

#include <cstdio>

namespace fixtures {

using namespace ssgsim;

namespace {

const Word kApprovalTopic =
    *Word::from_hex("0x8c5be1e5ebec7d5bd14f71427d1e84f3dd0314c0f7b2291e5b200ac8c7c3b925");
const Word kTransferTopic =
    *Word::from_hex("0xddf252ad1be2c89b69c2b068fc378daa952ba7f163c4a11628f55a4df523b3ef");

Fixture finish(std::string name, const Assembler& a, std::vector<FunctionLabels> fns)
{
    Fixture fx;
    fx.name = std::move(name);
    fx.code = Bytecode{a.assemble(), fx.name};
    for (const auto& [n, off] : a.names())
        fx.names[off] = n;
    fx.functions = std::move(fns);
    return fx;
}

}  // namespace

void dispatcher(Assembler& a, const std::vector<std::pair<std::uint32_t, std::string>>& routes)
{
    a.push(0x80).push(0x40).op(OP_MSTORE);
    a.push(4).op(OP_CALLDATASIZE).op(OP_LT).push_label("fb").op(OP_JUMPI);
    a.push(0).op(OP_CALLDATALOAD).push(0xe0).op(OP_SHR);
    for (const auto& [sel, target] : routes)
        a.op(OP_DUP1).push(Word{sel}, 4).op(OP_EQ).push_label(target).op(OP_JUMPI);
    a.label("fb").push(0).op(OP_DUP1).mark("fbrev").op(OP_REVERT);
}

namespace {

// Swapped layout: approve() whose emit block precedes the storage block in
// the bytecode, so execution order differs from layout order.
Fixture approve_swapped()
{
    Assembler a;
    dispatcher(a, {{0x095ea7b3, "approve"}});
    a.label("approve");
    a.push_label("ret");
    a.push(0x24).op(OP_CALLDATALOAD);  // amount
    a.push(0x04).op(OP_CALLDATALOAD);  // spender
    a.push_label("tag4").op(OP_JUMP);

    a.label("tag7");  // emit Approval(caller, spender, amount)
    a.op(OP_DUP2).push(0).op(OP_MSTORE);
    a.op(OP_DUP1).op(OP_CALLER).push(kApprovalTopic, 32).push(0x20).push(0).mark("lg").op(OP_LOG3);
    a.op(OP_POP).op(OP_POP).op(OP_JUMP);

    a.label("tag4");  // allowance[caller][spender] = amount
    a.op(OP_CALLER).push(0).op(OP_MSTORE);
    a.push(1).push(0x20).op(OP_MSTORE);
    a.push(0x40).push(0).mark("k1").op(OP_KECCAK256);
    a.push(0x20).op(OP_MSTORE);
    a.op(OP_DUP1).push(0).op(OP_MSTORE);
    a.push(0x40).push(0).mark("k2").op(OP_KECCAK256);
    a.op(OP_DUP3).op(OP_SWAP1).mark("st").op(OP_SSTORE);
    a.push_label("tag7").op(OP_JUMP);

    a.label("ret");
    a.push(1).push(0).op(OP_MSTORE).push(0x20).push(0).mark("rt").op(OP_RETURN);

    const std::string topic = "const:" + kApprovalTopic.to_hex();
    return finish("approve_swapped", a,
                  {{FunctionId::of(0x095ea7b3),
                    {"st -> lg", "lg -> rt"},
                    {"st -> st.slot0", "st -> st.stored_value0", "def:KECCAK256@k2 -> st.slot0",
                     "calldata:0x24 -> st.stored_value0", "calldata:0x4 -> def:KECCAK256@k2",
                     "def:KECCAK256@k1 -> def:KECCAK256@k2", "lg -> lg.topic0", "lg -> lg.topic1", "lg -> lg.topic2",
                     "lg -> lg.data0", topic + " -> lg.topic0", "info:CALLER -> lg.topic1",
                     "calldata:0x4 -> lg.topic2", "calldata:0x24 -> lg.data0", "rt -> rt.word0",
                     "const:0x1 -> rt.word0"}},
                   {FunctionId::fallback(), {}, {}}});
}

Fixture diamond()
{
    Assembler a;
    a.push(0).op(OP_CALLDATALOAD).push(1).mark("a").op(OP_SSTORE);
    a.push(0).op(OP_CALLDATALOAD).push_label("left").op(OP_JUMPI);
    a.push(2).mark("b").op(OP_SLOAD).op(OP_POP).push_label("join").op(OP_JUMP);
    a.label("left").op(OP_CALLER).push(3).mark("c").op(OP_SSTORE).push_label("join").op(OP_JUMP);
    a.label("join").push(0x20).push(0).mark("d").op(OP_LOG0).mark("e").op(OP_STOP);
    return finish("diamond", a,
                  {{FunctionId::fallback(),
                    {"a -> b", "a -> c", "b -> d", "c -> d", "d -> e"},
                    {"a -> a.slot0", "a -> a.stored_value0", "const:0x1 -> a.slot0", "calldata:0x0 -> a.stored_value0",
                     "b -> b.slot0", "const:0x2 -> b.slot0", "c -> c.slot0", "c -> c.stored_value0",
                     "const:0x3 -> c.slot0", "info:CALLER -> c.stored_value0", "d -> d.data0",
                     "const:0x0 -> d.data0"}}});
}

Fixture counter_loop()
{
    Assembler a;
    a.label("head");
    a.push(0).mark("ld").op(OP_SLOAD).push(1).op(OP_ADD).push(0).mark("st").op(OP_SSTORE);
    a.push(0).op(OP_CALLDATALOAD).push_label("head").op(OP_JUMPI);
    a.push(0).push(0).mark("rt").op(OP_RETURN);
    return finish("counter_loop", a,
                  {{FunctionId::fallback(),
                    {"ld -> st", "st -> ld", "st -> rt"},
                    {"ld -> ld.slot0", "const:0x0 -> ld.slot0", "st -> st.slot0", "st -> st.stored_value0",
                     "const:0x0 -> st.slot0", "def:SLOAD@ld -> st.stored_value0", "const:0x1 -> st.stored_value0"}}});
}

// One internal routine called from two sites: each call gets its own clone.
Fixture shared_routine()
{
    Assembler a;
    a.push_label("r1").push(0xaa).push_label("sub").op(OP_JUMP);
    a.label("r1").push_label("r2").push(0xbb).push_label("sub").op(OP_JUMP);
    a.label("r2").mark("end").op(OP_STOP);
    a.label("sub").push(5).mark("s").op(OP_SSTORE).op(OP_JUMP);
    return finish("shared_routine", a,
                  {{FunctionId::fallback(),
                    {"s@r1 -> s@r2", "s@r2 -> end"},
                    {"s@r1 -> s@r1.slot0", "s@r1 -> s@r1.stored_value0", "s@r2 -> s@r2.slot0",
                     "s@r2 -> s@r2.stored_value0", "const:0x5 -> s@r1.slot0", "const:0x5 -> s@r2.slot0",
                     "const:0xaa -> s@r1.stored_value0", "const:0xbb -> s@r2.stored_value0"}}});
}

Fixture token_dispatcher()
{
    Assembler a;
    dispatcher(a, {{0xa9059cbb, "transfer"}, {0x70a08231, "balanceOf"}, {0x18160ddd, "total"}});
    a.label("total").push(2).mark("tl").op(OP_SLOAD).push_label("retword").op(OP_JUMP);
    a.label("balanceOf");
    a.push(4).op(OP_CALLDATALOAD).push(0).op(OP_MSTORE).push(3).push(0x20).op(OP_MSTORE);
    a.push(0x40).push(0).mark("bk").op(OP_KECCAK256).mark("bl").op(OP_SLOAD).push_label("retword").op(OP_JUMP);
    a.label("retword").push(0x80).op(OP_MSTORE).push(0x20).push(0x80).mark("rr").op(OP_RETURN);
    a.label("transfer");
    a.push(0x24).op(OP_CALLDATALOAD).push(4).op(OP_CALLDATALOAD);
    a.op(OP_DUP2).op(OP_DUP2).mark("ts").op(OP_SSTORE);
    a.op(OP_DUP2).push(0x80).op(OP_MSTORE);
    a.op(OP_DUP1).op(OP_CALLER).push(kTransferTopic, 32).push(0x20).push(0x80).mark("tlg").op(OP_LOG3);
    a.mark("tst").op(OP_STOP);

    const std::string topic = "const:" + kTransferTopic.to_hex();
    return finish("token_dispatcher", a,
                  {{FunctionId::of(0x18160ddd),
                    {"tl -> rr"},
                    {"tl -> tl.slot0", "const:0x2 -> tl.slot0", "rr -> rr.word0", "def:SLOAD@tl -> rr.word0"}},
                   {FunctionId::of(0x70a08231),
                    {"bl -> rr"},
                    {"bl -> bl.slot0", "def:KECCAK256@bk -> bl.slot0", "calldata:0x4 -> def:KECCAK256@bk",
                     "const:0x3 -> def:KECCAK256@bk", "rr -> rr.word0", "def:SLOAD@bl -> rr.word0"}},
                   {FunctionId::of(0xa9059cbb),
                    {"ts -> tlg", "tlg -> tst"},
                    {"ts -> ts.slot0", "ts -> ts.stored_value0", "calldata:0x4 -> ts.slot0",
                     "calldata:0x24 -> ts.stored_value0", "tlg -> tlg.topic0", "tlg -> tlg.topic1",
                     "tlg -> tlg.topic2", "tlg -> tlg.data0", topic + " -> tlg.topic0", "info:CALLER -> tlg.topic1",
                     "calldata:0x4 -> tlg.topic2", "calldata:0x24 -> tlg.data0"}},
                   {FunctionId::fallback(), {}, {}}});
}

Fixture nonpayable_guard()
{
    Assembler a;
    a.op(OP_CALLVALUE).op(OP_DUP1).op(OP_ISZERO).push_label("ok").op(OP_JUMPI);
    a.push(0).op(OP_DUP1).mark("rv").op(OP_REVERT);
    a.label("ok").op(OP_POP).push(0).op(OP_CALLDATALOAD).push(7).mark("s1").op(OP_SSTORE).mark("sp").op(OP_STOP);
    return finish("nonpayable_guard", a,
                  {{FunctionId::fallback(),
                    {"s1 -> sp"},
                    {"s1 -> s1.slot0", "s1 -> s1.stored_value0", "const:0x7 -> s1.slot0",
                     "calldata:0x0 -> s1.stored_value0"}}});
}

// Call whose selector word travels calldata -> memory -> MLOAD -> memory.
Fixture forwarded_call()
{
    Assembler a;
    a.push(4).op(OP_CALLDATALOAD).push(0).op(OP_MSTORE);
    a.push(0).mark("ml").op(OP_MLOAD).push(0x40).op(OP_MSTORE);
    a.push(0x20).push(0).push(0x24).push(0x40).push(0).push(0x24).op(OP_CALLDATALOAD).op(OP_GAS).mark("cl").op(OP_CALL);
    a.push(0).mark("rs").op(OP_SSTORE);
    a.push(0).op(OP_MLOAD).push(1).mark("rs2").op(OP_SSTORE);
    a.mark("sp").op(OP_STOP);
    return finish("forwarded_call", a,
                  {{FunctionId::fallback(),
                    {"cl -> rs", "rs -> rs2", "rs2 -> sp"},
                    {"cl -> cl.address0", "cl -> cl.value0", "cl -> cl.selector0", "cl -> cl.arg0",
                     "calldata:0x24 -> cl.address0", "const:0x0 -> cl.value0", "calldata:0x4 -> cl.selector0",
                     "calldata:0x4 -> cl.arg0", "rs -> rs.slot0", "rs -> rs.stored_value0", "const:0x0 -> rs.slot0",
                     "returndata:?@cl -> rs.stored_value0", "rs2 -> rs2.slot0", "rs2 -> rs2.stored_value0",
                     "const:0x1 -> rs2.slot0", "returndata:0x0@cl -> rs2.stored_value0"}}});
}

Fixture same_slot_twice()
{
    Assembler a;
    a.push(1).push(0).mark("a").op(OP_SSTORE);
    a.op(OP_CALLER).push(0).mark("b").op(OP_SSTORE);
    a.mark("c").op(OP_STOP);
    return finish("same_slot_twice", a,
                  {{FunctionId::fallback(),
                    {"a -> b", "b -> c"},
                    {"a -> a.slot0", "a -> a.stored_value0", "b -> b.slot0", "b -> b.stored_value0",
                     "const:0x0 -> a.slot0", "const:0x1 -> a.stored_value0", "const:0x0 -> b.slot0",
                     "info:CALLER -> b.stored_value0"}}});
}

Fixture log_and_return()
{
    Assembler a;
    a.push(0).op(OP_CALLDATALOAD).push(0).mark("lg").op(OP_LOG0);
    a.op(OP_TIMESTAMP).push(0).op(OP_MSTORE).op(OP_NUMBER).push(0x20).op(OP_MSTORE);
    a.push(0x40).push(0).mark("rt").op(OP_RETURN);
    return finish("log_and_return", a,
                  {{FunctionId::fallback(),
                    {"lg -> rt"},
                    {"lg -> lg.data0", "rt -> rt.word0", "rt -> rt.word1", "info:TIMESTAMP -> rt.word0",
                     "info:NUMBER -> rt.word1"}}});
}

Fixture clobbered_memory()
{
    Assembler a;
    a.push(0x11).push(0).op(OP_MSTORE);
    a.op(OP_CALLER).push(0).op(OP_CALLDATALOAD).op(OP_MSTORE);
    a.push(0).mark("ml").op(OP_MLOAD).push(9).mark("s").op(OP_SSTORE);
    a.mark("sp").op(OP_STOP);
    return finish("clobbered_memory", a,
                  {{FunctionId::fallback(),
                    {"s -> sp"},
                    {"s -> s.slot0", "s -> s.stored_value0", "const:0x9 -> s.slot0", "def:MLOAD@ml -> s.stored_value0"}}});
}

// Loop A <-> B whose only stable statement sits on the back edge.
Fixture stateless_cycle()
{
    Assembler a;
    a.label("A").push(0).op(OP_CALLDATALOAD).push_label("B").op(OP_JUMPI);
    a.mark("sx").op(OP_STOP);
    a.label("B").push(0).op(OP_CALLDATALOAD).push_label("A").op(OP_JUMPI);
    a.push(2).push(1).mark("s").op(OP_SSTORE).push_label("A").op(OP_JUMP);
    return finish("stateless_cycle", a,
                  {{FunctionId::fallback(),
                    {"s -> sx", "s -> s"},
                    {"s -> s.slot0", "s -> s.stored_value0", "const:0x1 -> s.slot0", "const:0x2 -> s.stored_value0"}}});
}

Fixture environment_calls()
{
    Assembler a;
    a.op(OP_ADDRESS).mark("bal").op(OP_BALANCE).push(3).mark("s").op(OP_SSTORE);
    a.push(Word{0x18160ddd}, 4).push(0xe0).op(OP_SHL).push(0).op(OP_MSTORE);
    a.push(0).push(0).push(4).push(0).push(4).op(OP_CALLDATALOAD).op(OP_GAS).mark("sc").op(OP_STATICCALL);
    a.op(OP_POP).op(OP_ORIGIN).mark("sd").op(OP_SELFDESTRUCT);
    return finish("environment_calls", a,
                  {{FunctionId::fallback(),
                    {"bal -> s", "s -> sc", "sc -> sd"},
                    {"bal -> bal.address0", "info:ADDRESS -> bal.address0", "s -> s.slot0", "s -> s.stored_value0",
                     "const:0x3 -> s.slot0", "def:BALANCE@bal -> s.stored_value0", "sc -> sc.address0",
                     "sc -> sc.selector0", "calldata:0x4 -> sc.address0", "const:0x18160ddd -> sc.selector0",
                     "sd -> sd.address0", "info:ORIGIN -> sd.address0"}}});
}

}  // namespace

std::vector<Fixture> all_fixtures()
{
    return {approve_swapped(), diamond(),         counter_loop(),     shared_routine(),
            token_dispatcher(), nonpayable_guard(), forwarded_call(),   same_slot_twice(),
            log_and_return(),   clobbered_memory(), stateless_cycle(), environment_calls()};
}

// --- naming ----------------------------------------------------------------

namespace {

class Namer {
public:
    Namer(const Fixture& fx, const FunctionCfg& cfg, const Ssg& g) : fx_(fx), cfg_(cfg), g_(g)
    {
        for (const auto& c : g.control_nodes)
            ++per_offset_[c.site.offset];
    }

    std::string node(NodeId id) const
    {
        if (g_.is_control(id))
            return control(g_.control_nodes[id]);
        const DataNode& d = g_.data(id);
        if (!is_source(d.kind)) {
            // The sink's owner is its unique CD predecessor.
            for (const auto& e : g_.edges) {
                if (e.rel == Relation::CD && e.to == id)
                    return control(g_.control_nodes[e.from]) + "." + to_string(d.attrs.role) +
                           std::to_string(d.attrs.index);
            }
            return "orphan-sink";
        }
        auto opt = [](const std::optional<Word>& w) { return w ? w->to_hex() : std::string("?"); };
        switch (d.kind) {
        case DataKind::Constant: return "const:" + opt(d.attrs.value);
        case DataKind::Information: return "info:" + opcode_name(d.attrs.opcode);
        case DataKind::Calldata: return "calldata:" + opt(d.attrs.value);
        case DataKind::ReturnData: return "returndata:" + opt(d.attrs.value) + "@" + site(d.site);
        case DataKind::Definition: return "def:" + opcode_name(d.attrs.opcode) + "@" + site(d.site);
        default: return "?";
        }
    }

private:
    std::string name_at(std::size_t offset) const
    {
        auto it = fx_.names.find(offset);
        if (it != fx_.names.end())
            return it->second;
        char buf[24];
        std::snprintf(buf, sizeof buf, "0x%zx", offset);
        return buf;
    }

    std::string site(const std::optional<Site>& s) const
    {
        if (!s)
            return "?";
        return (s->block == kPrefixBlock ? "prefix:" : "") + name_at(s->offset);
    }

    std::string control(const ControlNode& c) const
    {
        std::string out = name_at(c.site.offset);
        if (per_offset_.at(c.site.offset) > 1 && c.site.block < cfg_.nodes.size()) {
            const auto& path = cfg_.nodes[c.site.block].clone_path;
            for (std::size_t i = 0; i < path.size(); ++i)
                out += (i == 0 ? "@" : "/") + name_at(path[i]);
        }
        return out;
    }

    const Fixture& fx_;
    const FunctionCfg& cfg_;
    const Ssg& g_;
    std::map<std::size_t, int> per_offset_;
};

}  // namespace

Described describe(const Fixture& fx, const FunctionId& fn)
{
    Program program(fx.code);
    DispatchInfo dispatch = analyze_dispatcher(program);
    FunctionCfg cfg = get_cfg(program, dispatch, fn);
    Described out;
    out.ssg = extract_ssg(program, dispatch, fn);
    Namer namer(fx, cfg, out.ssg);
    for (const auto& e : out.ssg.edges) {
        std::string text = namer.node(e.from) + " -> " + namer.node(e.to);
        (e.rel == Relation::CC ? out.cc : out.sdfg).insert(std::move(text));
    }
    return out;
}

Score score(const std::set<std::string>& predicted, const std::set<std::string>& truth)
{
    Score s;
    for (const auto& p : predicted)
        (truth.contains(p) ? s.tp : s.fp)++;
    for (const auto& t : truth)
        s.fn += !predicted.contains(t);
    return s;
}

}  // namespace fixtures
