// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#pragma once

#include "ssgsim/assembler.hpp"
#include "ssgsim/bytecode.hpp"
#include "ssgsim/cfg.hpp"
#include "ssgsim/ssg.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace fixtures {

// Hand labels name nodes by assembler marks, independent of node ids:
//   control node   "<mark>", plus "@<ret>[/<ret>...]" when a block is cloned
//   sink           "<control>.<role><index>", e.g. "st.slot0", "lg.topic2"
//   source         "const:0x5", "info:CALLER", "calldata:0x24", "calldata:?",
//                  "returndata:0x0@<mark>", "def:SLOAD@<mark>"
// Edges are "<from> -> <to>"; the relation follows from the endpoints.

struct FunctionLabels {
    ssgsim::FunctionId fn;
    std::set<std::string> cc;
    std::set<std::string> sdfg;  // DD and CD edges
};

struct Fixture {
    std::string name;
    ssgsim::Bytecode code;
    std::map<std::size_t, std::string> names;  // offset -> mark
    std::vector<FunctionLabels> functions;
};

std::vector<Fixture> all_fixtures();

/// solc-style prologue: free memory pointer, short-calldata guard, selector
/// extraction and one EQ/JUMPI per selector to the named labels. The
/// fallback label is "fb"; it reverts at mark "fbrev".
void dispatcher(ssgsim::Assembler& a, const std::vector<std::pair<std::uint32_t, std::string>>& routes);

struct Described {
    ssgsim::Ssg ssg;
    std::set<std::string> cc;
    std::set<std::string> sdfg;
};

/// Extracts fn from the fixture and names its edges in label notation.
Described describe(const Fixture& fx, const ssgsim::FunctionId& fn);

struct Score {
    std::size_t tp = 0, fp = 0, fn = 0;
    double f1() const { return tp + fp + fn == 0 ? 1.0 : 2.0 * tp / (2.0 * tp + fp + fn); }
};

Score score(const std::set<std::string>& predicted, const std::set<std::string>& truth);

}  // namespace fixtures
