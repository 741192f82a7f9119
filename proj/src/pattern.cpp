#include "offload/pattern.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "offload/errors.hpp"

namespace offload {

std::string device_name(Device d) {
    switch (d) {
        case Device::gpu: return "gpu";
        case Device::fpga: return "fpga";
        case Device::many_core: return "many_core";
    }
    throw std::invalid_argument("bad device enum");
}

Device device_from_name(const std::string& name) {
    if (name == "gpu") return Device::gpu;
    if (name == "fpga") return Device::fpga;
    if (name == "many_core" || name == "many-core") return Device::many_core;
    throw ConfigError("unknown device '" + name + "'");
}

std::string Gene::to_string() const {
    std::string s;
    s.reserve(bits.size());
    for (std::uint8_t b : bits) s.push_back(b ? '1' : '0');
    return s;
}

Gene Gene::from_string(const std::string& s) {
    Gene g;
    g.bits.reserve(s.size());
    for (char c : s) {
        if (c != '0' && c != '1') {
            throw std::invalid_argument("gene string must be binary, got '" + s + "'");
        }
        g.bits.push_back(c == '1');
    }
    return g;
}

std::vector<bool> covered_loops(const LoopProgram& program, const Gene& gene) {
    std::vector<int> par = parallelizable_ids(program);
    if (gene.size() != par.size()) {
        throw std::invalid_argument("gene length " + std::to_string(gene.size()) +
                                    " does not match parallelizable loop count " +
                                    std::to_string(par.size()));
    }
    std::vector<bool> own(program.loops.size(), false);
    for (std::size_t i = 0; i < par.size(); ++i) own[par[i]] = gene.bits[i] != 0;
    std::vector<bool> covered(program.loops.size(), false);
    for (const LoopStatement& l : program.loops) {
        covered[l.id] = own[l.id] || (l.parent && covered[*l.parent]);
    }
    return covered;
}

std::vector<int> region_roots(const LoopProgram& program, const Gene& gene) {
    std::vector<bool> covered = covered_loops(program, gene);
    std::vector<int> roots;
    for (const LoopStatement& l : program.loops) {
        if (covered[l.id] && (!l.parent || !covered[*l.parent])) roots.push_back(l.id);
    }
    return roots;
}

namespace {

void subtree_vars(const LoopProgram& program, const std::vector<std::vector<int>>& children,
                  int root, std::set<std::string>& reads, std::set<std::string>& writes) {
    const LoopStatement& l = program.loop(root);
    reads.insert(l.reads.begin(), l.reads.end());
    writes.insert(l.writes.begin(), l.writes.end());
    for (int child : children[root]) subtree_vars(program, children, child, reads, writes);
}

// True when every loop under `root` that touches `var` runs device-side.
bool device_only_for(const LoopProgram& program, const std::vector<std::vector<int>>& children,
                     const std::vector<bool>& covered, int root, const std::string& var) {
    const LoopStatement& l = program.loop(root);
    if ((l.reads.count(var) || l.writes.count(var)) && !covered[l.id]) return false;
    for (int child : children[root]) {
        if (!device_only_for(program, children, covered, child, var)) return false;
    }
    return true;
}

}  // namespace

OffloadPattern materialize(const LoopProgram& program, const Gene& gene, Device device) {
    OffloadPattern pattern;
    pattern.gene = gene;
    pattern.device = device;
    pattern.program_digest = program.source_digest;

    auto children = child_index(program);
    for (int root : region_roots(program, gene)) {
        std::set<std::string> reads, writes;
        subtree_vars(program, children, root, reads, writes);
        for (const std::string& var : reads) {
            pattern.transfers.entries.push_back({var, Direction::to_device, root, true});
        }
        for (const std::string& var : writes) {
            pattern.transfers.entries.push_back({var, Direction::to_host, root, true});
        }
    }
    return pattern;
}

OffloadPattern hoist_transfers(const LoopProgram& program, const OffloadPattern& pattern) {
    if (pattern.program_digest != program.source_digest) {
        throw std::invalid_argument("pattern was not derived from this program");
    }
    OffloadPattern hoisted;
    hoisted.gene = pattern.gene;
    hoisted.device = pattern.device;
    hoisted.program_digest = pattern.program_digest;

    auto children = child_index(program);
    std::vector<bool> covered = covered_loops(program, pattern.gene);

    // (attach loop, variable) -> directions merged from every region that
    // hoisted there; std::map keeps the plan order deterministic.
    struct Group {
        bool to_device = false;
        bool to_host = false;
        bool per_entry = true;
    };
    std::map<std::pair<int, std::string>, Group> groups;

    for (int root : region_roots(program, pattern.gene)) {
        std::set<std::string> reads, writes;
        subtree_vars(program, children, root, reads, writes);
        std::set<std::string> vars = reads;
        vars.insert(writes.begin(), writes.end());
        for (const std::string& var : vars) {
            // Climb while everything touching the variable stays device-side.
            int attach = root;
            while (true) {
                const LoopStatement& l = program.loop(attach);
                if (!l.parent) break;
                if (!device_only_for(program, children, covered, *l.parent, var)) break;
                attach = *l.parent;
            }
            Group& g = groups[{attach, var}];
            g.to_device = g.to_device || reads.count(var) > 0;
            g.to_host = g.to_host || writes.count(var) > 0;
            // A single transfer per run is sound only when no CPU access can
            // interleave between entries, i.e. the climb reached top level.
            g.per_entry = program.loop(attach).parent.has_value();
        }
    }

    for (const auto& [key, group] : groups) {
        if (group.to_device) {
            hoisted.transfers.entries.push_back(
                {key.second, Direction::to_device, key.first, group.per_entry});
        }
        if (group.to_host) {
            hoisted.transfers.entries.push_back(
                {key.second, Direction::to_host, key.first, group.per_entry});
        }
    }
    return hoisted;
}

std::int64_t transfer_count(const LoopProgram& program, const OffloadPattern& pattern) {
    std::int64_t total = 0;
    for (const TransferEntry& e : pattern.transfers.entries) {
        total += e.per_entry ? entry_count(program, e.attach_loop_id) : 1;
    }
    return total;
}

std::string pattern_key(const OffloadPattern& pattern) {
    return device_name(pattern.device) + ":" + pattern.gene.to_string();
}

}  // namespace offload
