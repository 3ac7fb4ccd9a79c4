// SPDX-License-Identifier: Apache-2.0

#include "lemon/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <set>

namespace lemon {

const char* container_errc_name(ContainerErrc code) {
    switch (code) {
        case ContainerErrc::bad_magic: return "bad magic";
        case ContainerErrc::unsupported_version: return "unsupported version";
        case ContainerErrc::malformed_table: return "malformed table";
        case ContainerErrc::truncated_payload: return "truncated payload";
        case ContainerErrc::io_error: return "io error";
    }
    return "?";
}

namespace {

constexpr char kMagic[4] = {'L', 'E', 'M', 'N'};

std::uint64_t align_up(std::uint64_t v) { return (v + kContainerAlign - 1) / kContainerAlign * kContainerAlign; }

template <typename U>
void put_le(std::vector<std::uint8_t>& out, std::size_t at, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        out[at + i] = static_cast<std::uint8_t>(value >> (8 * i));
    }
}

template <typename U>
U get_le(std::span<const std::uint8_t> in, std::size_t at) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        v |= static_cast<U>(in[at + i]) << (8 * i);
    }
    return v;
}

bool length_matches(const TensorEntry& e) {
    std::uint64_t n = dtype_size(e.dtype);
    for (std::size_t d : e.shape) {
        if (n > UINT64_MAX / d) {
            return false;
        }
        n *= d;
    }
    return n == e.byte_length;
}

std::optional<ContainerHeader> analyze(std::span<const std::uint8_t> bytes, std::vector<Diagnostic>& diags) {
    auto fail = [&](ContainerErrc code, std::string msg) { diags.push_back({code, std::move(msg)}); };
    const std::uint64_t size = bytes.size();
    if (size < 4) {
        fail(ContainerErrc::truncated_payload, "file shorter than the magic number");
        return std::nullopt;
    }
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        fail(ContainerErrc::bad_magic, "file does not start with \"LEMN\"");
        return std::nullopt;
    }
    if (size < 16) {
        fail(ContainerErrc::truncated_payload, "file shorter than the fixed preamble");
        return std::nullopt;
    }
    ContainerHeader h;
    h.version = get_le<std::uint32_t>(bytes, 4);
    if (h.version != kContainerVersion) {
        fail(ContainerErrc::unsupported_version, "version " + std::to_string(h.version) + " (reader supports 1)");
        return std::nullopt;
    }
    h.header_len = get_le<std::uint64_t>(bytes, 8);
    if (h.header_len > size - 16) {
        fail(ContainerErrc::truncated_payload, "header of " + std::to_string(h.header_len) + " bytes runs past the end of the file");
        return std::nullopt;
    }
    h.payload_base = align_up(16 + h.header_len);

    const auto* text = reinterpret_cast<const char*>(bytes.data() + 16);
    try {
        h.header = Json::parse(text, text + h.header_len);
    } catch (const Json::parse_error& e) {
        fail(ContainerErrc::malformed_table, std::string("header is not valid JSON: ") + e.what());
        return std::nullopt;
    }
    if (!h.header.is_object() || !h.header.contains("spec") || !h.header.contains("tensors") ||
        !h.header.at("tensors").is_array()) {
        fail(ContainerErrc::malformed_table, "header needs a \"spec\" object and a \"tensors\" array");
        return std::nullopt;
    }
    for (const auto& [key, value] : h.header.items()) {
        if (key != "spec" && key != "tensors" && key != "duplicate_map") {
            fail(ContainerErrc::malformed_table, "unknown header field '" + key + "'");
        }
    }
    try {
        h.spec = spec_from_json(h.header.at("spec"));
    } catch (const Error& e) {
        fail(ContainerErrc::malformed_table, std::string("bad spec: ") + e.what());
        return std::nullopt;
    }
    if (h.header.contains("duplicate_map")) {
        try {
            h.duplicate_map = duplicate_map_from_json(h.header.at("duplicate_map"));
        } catch (const Error& e) {
            fail(ContainerErrc::malformed_table, std::string("bad duplicate map: ") + e.what());
        }
    }

    std::set<std::string> names;
    for (const auto& t : h.header.at("tensors")) {
        TensorEntry e;
        try {
            if (!t.is_object()) {
                throw PlanError("entry is not an object");
            }
            e.name = t.at("name").get<std::string>();
            e.dtype = parse_dtype(t.at("dtype").get<std::string>());
            for (const auto& d : t.at("shape")) {
                if (!d.is_number_unsigned() || d.get<std::uint64_t>() == 0) {
                    throw PlanError("shape extents must be positive integers");
                }
                e.shape.push_back(d.get<std::size_t>());
            }
            if (!t.at("byte_offset").is_number_unsigned() || !t.at("byte_length").is_number_unsigned()) {
                throw PlanError("byte_offset and byte_length must be non-negative integers");
            }
            e.byte_offset = t.at("byte_offset").get<std::uint64_t>();
            e.byte_length = t.at("byte_length").get<std::uint64_t>();
        } catch (const std::exception& ex) {
            fail(ContainerErrc::malformed_table, "tensor entry: " + std::string(ex.what()));
            continue;
        }
        if (!names.insert(e.name).second) {
            fail(ContainerErrc::malformed_table, "duplicate tensor name '" + e.name + "'");
        }
        if (!length_matches(e)) {
            fail(ContainerErrc::malformed_table, "'" + e.name + "' byte_length " + std::to_string(e.byte_length) +
                                                     " does not match shape " + shape_string(e.shape));
        }
        if (e.byte_offset % kContainerAlign != 0) {
            fail(ContainerErrc::malformed_table,
                 "'" + e.name + "' byte_offset " + std::to_string(e.byte_offset) + " is not 64-byte aligned");
        }
        if (h.payload_base > size || e.byte_offset > size - h.payload_base ||
            e.byte_length > size - h.payload_base - e.byte_offset) {
            fail(ContainerErrc::truncated_payload, "'" + e.name + "' extends past the end of the file");
        }
        h.tensors.push_back(std::move(e));
    }

    std::vector<const TensorEntry*> by_offset;
    for (const auto& e : h.tensors) {
        by_offset.push_back(&e);
    }
    std::sort(by_offset.begin(), by_offset.end(),
              [](const TensorEntry* a, const TensorEntry* b) { return a->byte_offset < b->byte_offset; });
    for (std::size_t i = 1; i < by_offset.size(); ++i) {
        const auto* a = by_offset[i - 1];
        const auto* b = by_offset[i];
        if (a->byte_length > b->byte_offset - a->byte_offset) {
            fail(ContainerErrc::malformed_table, "tensors '" + a->name + "' and '" + b->name + "' overlap");
        }
    }

    // The table must list exactly the tensors the model descriptor calls for. Each block
    // owns at least ten tensors, which bounds the depth a table can describe.
    if (h.spec.depth > h.tensors.size()) {
        fail(ContainerErrc::malformed_table, "spec depth " + std::to_string(h.spec.depth) +
                                                 " exceeds the number of tensors in the table");
        return std::nullopt;
    }
    ModelWeights scratch;
    std::map<std::string, Shape> expected;
    for (const auto& slot : tensor_slots(scratch, h.spec)) {
        expected.emplace(slot.name, slot.shape);
    }
    for (const auto& e : h.tensors) {
        auto it = expected.find(e.name);
        if (it == expected.end()) {
            fail(ContainerErrc::malformed_table, "unexpected tensor '" + e.name + "'");
        } else if (it->second != e.shape) {
            fail(ContainerErrc::malformed_table, "'" + e.name + "' has shape " + shape_string(e.shape) +
                                                     ", spec needs " + shape_string(it->second));
        }
    }
    for (const auto& [name, shape] : expected) {
        if (!names.count(name)) {
            fail(ContainerErrc::malformed_table, "missing tensor '" + name + "'");
        }
    }
    if (!diags.empty()) {
        return std::nullopt;
    }
    return h;
}

double decode_value(std::span<const std::uint8_t> bytes, std::size_t at, DType dtype) {
    if (dtype == DType::f32) {
        return static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(bytes, at)));
    }
    return std::bit_cast<double>(get_le<std::uint64_t>(bytes, at));
}

}  // namespace

void round_to_storage(ModelWeights& w, const ModelSpec& spec) {
    if (spec.dtype != DType::f32) {
        return;
    }
    for (auto& slot : tensor_slots(w, spec)) {
        for (double& v : slot.tensor->data()) {
            v = static_cast<double>(static_cast<float>(v));
        }
    }
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
    check_weights(ckpt.weights, ckpt.spec);
    const auto slots = tensor_slots(ckpt.weights, ckpt.spec);
    const std::size_t esize = dtype_size(ckpt.spec.dtype);

    Json table = Json::array();
    std::uint64_t offset = 0, end = 0;
    std::vector<std::uint64_t> offsets;
    for (const auto& slot : slots) {
        const std::uint64_t len = slot.tensor->numel() * esize;
        offsets.push_back(offset);
        table.push_back(Json{{"name", slot.name},
                             {"dtype", dtype_name(ckpt.spec.dtype)},
                             {"shape", slot.shape},
                             {"byte_offset", offset},
                             {"byte_length", len}});
        end = offset + len;
        offset = align_up(end);
    }
    Json header{{"spec", spec_to_json(ckpt.spec)}, {"tensors", table}};
    if (ckpt.duplicate_map) {
        header["duplicate_map"] = duplicate_map_to_json(*ckpt.duplicate_map);
    }
    const std::string text = header.dump();
    const std::uint64_t base = align_up(16 + text.size());

    // the file ends with the last tensor, no trailing padding
    std::vector<std::uint8_t> out(base + end, 0);
    std::memcpy(out.data(), kMagic, 4);
    put_le<std::uint32_t>(out, 4, kContainerVersion);
    put_le<std::uint64_t>(out, 8, text.size());
    std::memcpy(out.data() + 16, text.data(), text.size());
    for (std::size_t s = 0; s < slots.size(); ++s) {
        std::size_t at = base + offsets[s];
        for (double v : slots[s].tensor->data()) {
            if (ckpt.spec.dtype == DType::f32) {
                put_le<std::uint32_t>(out, at, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
            } else {
                put_le<std::uint64_t>(out, at, std::bit_cast<std::uint64_t>(v));
            }
            at += esize;
        }
    }
    // A container must also be readable by this library.
    if (const auto diags = validate_header(out); !diags.empty()) {
        throw ContainerError(diags.front().code, diags.front().message);
    }
    return out;
}

void write_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    const auto bytes = serialize_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ContainerError(ContainerErrc::io_error, "cannot open '" + path + "' for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw ContainerError(ContainerErrc::io_error, "write to '" + path + "' failed");
    }
}

std::vector<Diagnostic> validate_header(std::span<const std::uint8_t> bytes) {
    std::vector<Diagnostic> diags;
    analyze(bytes, diags);
    return diags;
}

ContainerHeader parse_header(std::span<const std::uint8_t> bytes) {
    std::vector<Diagnostic> diags;
    auto h = analyze(bytes, diags);
    if (!h) {
        throw ContainerError(diags.front().code, diags.front().message);
    }
    return std::move(*h);
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
    ContainerHeader h = parse_header(bytes);
    Checkpoint ckpt;
    ckpt.spec = h.spec;
    ckpt.duplicate_map = h.duplicate_map;
    std::map<std::string, const TensorEntry*> index;
    for (const auto& e : h.tensors) {
        index.emplace(e.name, &e);
    }
    for (auto& slot : tensor_slots(ckpt.weights, ckpt.spec)) {
        const TensorEntry& e = *index.at(slot.name);
        TensorD t(e.shape);
        const std::size_t esize = dtype_size(e.dtype);
        std::size_t at = h.payload_base + e.byte_offset;
        for (double& v : t.data()) {
            v = decode_value(bytes, at, e.dtype);
            at += esize;
        }
        *slot.tensor = std::move(t);
    }
    return ckpt;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ContainerError(ContainerErrc::io_error, "cannot open '" + path + "'");
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw ContainerError(ContainerErrc::io_error, "read from '" + path + "' failed");
    }
    return bytes;
}

Checkpoint read_checkpoint(const std::string& path) { return parse_checkpoint(read_file_bytes(path)); }

}  // namespace lemon
