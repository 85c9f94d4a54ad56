// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef METAMAT_IO_HPP
#define METAMAT_IO_HPP

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <nlohmann/json.hpp>
#include "metamat/fields.hpp"

namespace metamat
{

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Writes to a sibling temporary and renames over the target.
void WriteFileAtomic(const fs::path &path, std::string_view contents);
std::string ReadFile(const fs::path &path);

// Little-endian interleaved (re, im) float64.
std::string EncodeComplexArray(std::span<const cplx> values);
CVector DecodeComplexArray(std::string_view bytes);
void WriteComplexArray(const fs::path &path, std::span<const cplx> values);
CVector ReadComplexArray(const fs::path &path);

json ComplexToJson(cplx z);
cplx ComplexFromJson(const json &j);
json VecToJson(const Vec3 &v);
Vec3 VecFromJson(const json &j);

// Rejects keys of obj that are not in allowed.
void RequireKnownKeys(const json &obj, std::initializer_list<std::string_view> allowed,
                      std::string_view where);

// Grid files: <stem>.bin holds the samples (z fastest), <stem>.json the sidecar.
void WriteGrid(const fs::path &sidecar, const Vec3 &origin, double voxel,
               std::array<std::size_t, 3> dims, std::span<const cplx> data);
FieldSpec ReadGrid(const fs::path &sidecar);

// FieldSpec JSON: {"type": ..., ...}; relative grid sidecars resolve against base_dir.
FieldSpec FieldFromJson(const json &j, const fs::path &base_dir = {});
json FieldToJson(const FieldSpec &f);

}  // namespace metamat

#endif  // METAMAT_IO_HPP
