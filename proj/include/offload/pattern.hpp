#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "offload/loop_model.hpp"

namespace offload {

enum class Device { gpu, fpga, many_core };

std::string device_name(Device d);
// Accepts canonical tokens plus the CLI spelling "many-core".
Device device_from_name(const std::string& name);

// Bit vector over parallelizable loops: 1 = run on the device, 0 = CPU.
struct Gene {
    std::vector<std::uint8_t> bits;

    std::size_t size() const { return bits.size(); }
    std::string to_string() const;
    static Gene from_string(const std::string& s);

    bool operator==(const Gene&) const = default;
    auto operator<=>(const Gene&) const = default;
};

enum class Direction { to_device, to_host };

struct TransferEntry {
    std::string variable;
    Direction direction = Direction::to_device;
    int attach_loop_id = 0;  // transfer brackets this loop's execution
    bool per_entry = true;   // true: repeats on every dynamic entry; false: once per run

    bool operator==(const TransferEntry&) const = default;
};

struct TransferPlan {
    std::vector<TransferEntry> entries;

    bool operator==(const TransferPlan&) const = default;
};

struct OffloadPattern {
    Gene gene;
    Device device = Device::gpu;
    TransferPlan transfers;
    std::string program_digest;
};

// A loop runs device-side when its own bit or any ancestor's bit is set.
std::vector<bool> covered_loops(const LoopProgram& program, const Gene& gene);

// Outermost device-side loops; transfers bracket these.
std::vector<int> region_roots(const LoopProgram& program, const Gene& gene);

// Naive plan: every variable the region reads goes to_device and every
// variable it writes comes to_host, re-transferred on each dynamic entry.
OffloadPattern materialize(const LoopProgram& program, const Gene& gene, Device device);

// Batches transfers at the highest ancestor where the variable is touched by
// device-side loops only. Recomputed from the gene, so applying it twice
// equals applying it once, and the dynamic transfer count never increases.
OffloadPattern hoist_transfers(const LoopProgram& program, const OffloadPattern& pattern);

// Total dynamic transfer events implied by the plan.
std::int64_t transfer_count(const LoopProgram& program, const OffloadPattern& pattern);

// Canonical serialized form "device:bitstring", e.g. "gpu:1010011010111".
std::string pattern_key(const OffloadPattern& pattern);

}  // namespace offload
