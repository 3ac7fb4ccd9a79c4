// SPDX-License-Identifier: Apache-2.0
//
// Single-file checkpoint container.
//
//   offset 0   "LEMN"
//   offset 4   u32 LE version (1)
//   offset 8   u64 LE header_len
//   offset 16  header_len bytes of UTF-8 JSON:
//              {"spec": {...}, "tensors": [{"name", "dtype", "shape", "byte_offset",
//               "byte_length"}, ...], "duplicate_map": [...]}   (duplicate_map optional)
//   payload    starts at align_up(16 + header_len, 64), zero padded before it
//
// byte_offset is relative to the payload start and is a multiple of 64, so
// every tensor is 64-byte aligned in the file. Values are row-major little-endian
// f32 or f64. Weights are held in memory as f64; f32 storage rounds on write.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lemon/config.hpp"
#include "lemon/expander.hpp"
#include "lemon/model.hpp"

namespace lemon {

enum class ContainerErrc { bad_magic, unsupported_version, malformed_table, truncated_payload, io_error };

const char* container_errc_name(ContainerErrc code);

class ContainerError : public IoError {
public:
    ContainerError(ContainerErrc code, const std::string& message)
        : IoError(std::string(container_errc_name(code)) + ": " + message), code_(code) {}

    ContainerErrc code() const { return code_; }

private:
    ContainerErrc code_;
};

struct Diagnostic {
    ContainerErrc code;
    std::string message;
};

struct Checkpoint {
    ModelSpec spec;
    ModelWeights weights;
    std::optional<DuplicateMap> duplicate_map;
};

struct TensorEntry {
    std::string name;
    DType dtype = DType::f64;
    Shape shape;
    std::uint64_t byte_offset = 0;
    std::uint64_t byte_length = 0;
};

struct ContainerHeader {
    std::uint32_t version = 1;
    std::uint64_t header_len = 0;
    std::uint64_t payload_base = 0;
    Json header;
    ModelSpec spec;
    std::vector<TensorEntry> tensors;
    std::optional<DuplicateMap> duplicate_map;
};

inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::uint64_t kContainerAlign = 64;

/// Rounds every weight to the ModelSpec storage dtype so that a write/read round
/// trip reproduces the in-memory values exactly.
void round_to_storage(ModelWeights& w, const ModelSpec& spec);

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
void write_checkpoint(const Checkpoint& ckpt, const std::string& path);

/// Checks magic, version, header JSON, tensor table (names, dtypes, shapes,
/// lengths, alignment, overlap, bounds against bytes.size()) without decoding
/// any payload. Empty result means the file is valid.
std::vector<Diagnostic> validate_header(std::span<const std::uint8_t> bytes);

/// Parsed header of a valid file; throws ContainerError with the first diagnostic otherwise.
ContainerHeader parse_header(std::span<const std::uint8_t> bytes);

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);
Checkpoint read_checkpoint(const std::string& path);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);

}  // namespace lemon
