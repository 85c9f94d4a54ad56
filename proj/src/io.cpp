// Copyright the metamat authors.
// SPDX-License-Identifier: Apache-2.0

#include "metamat/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <fmt/format.h>

namespace metamat
{

void WriteFileAtomic(const fs::path &path, std::string_view contents)
{
  if (path.has_parent_path())
  {
    fs::create_directories(path.parent_path());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
    {
      throw ConfigError(fmt::format("cannot open {} for writing", tmp.string()));
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out)
    {
      throw ConfigError(fmt::format("write to {} failed", tmp.string()));
    }
  }
  fs::rename(tmp, path);
}

std::string ReadFile(const fs::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw ConfigError(fmt::format("cannot open {}", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace
{

std::uint64_t ToLittle(std::uint64_t v)
{
  if constexpr (std::endian::native == std::endian::big)
  {
    return __builtin_bswap64(v);
  }
  return v;
}

}  // namespace

std::string EncodeComplexArray(std::span<const cplx> values)
{
  std::string bytes(values.size() * 16, '\0');
  char *out = bytes.data();
  for (const auto &z : values)
  {
    for (double part : {z.real(), z.imag()})
    {
      const auto bits = ToLittle(std::bit_cast<std::uint64_t>(part));
      std::memcpy(out, &bits, 8);
      out += 8;
    }
  }
  return bytes;
}

CVector DecodeComplexArray(std::string_view bytes)
{
  if (bytes.size() % 16 != 0)
  {
    throw ConfigError("complex array file size is not a multiple of 16 bytes");
  }
  CVector values(bytes.size() / 16);
  const char *in = bytes.data();
  for (auto &z : values)
  {
    std::uint64_t re, im;
    std::memcpy(&re, in, 8);
    std::memcpy(&im, in + 8, 8);
    in += 16;
    z = {std::bit_cast<double>(ToLittle(re)), std::bit_cast<double>(ToLittle(im))};
  }
  return values;
}

void WriteComplexArray(const fs::path &path, std::span<const cplx> values)
{
  WriteFileAtomic(path, EncodeComplexArray(values));
}

CVector ReadComplexArray(const fs::path &path)
{
  return DecodeComplexArray(ReadFile(path));
}

json ComplexToJson(cplx z)
{
  return json::array({z.real(), z.imag()});
}

cplx ComplexFromJson(const json &j)
{
  if (j.is_number())
  {
    return {j.get<double>(), 0.0};
  }
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
  {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw ConfigError(fmt::format("expected complex [re, im], got {}", j.dump()));
}

json VecToJson(const Vec3 &v)
{
  return json::array({v.x(), v.y(), v.z()});
}

Vec3 VecFromJson(const json &j)
{
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
      !j[2].is_number())
  {
    throw ConfigError(fmt::format("expected 3-vector, got {}", j.dump()));
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void RequireKnownKeys(const json &obj, std::initializer_list<std::string_view> allowed,
                      std::string_view where)
{
  if (!obj.is_object())
  {
    throw ConfigError(fmt::format("{}: expected a JSON object", where));
  }
  for (const auto &[key, value] : obj.items())
  {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
    {
      throw ConfigError(fmt::format("{}: unknown key \"{}\"", where, key));
    }
  }
}

namespace
{

const json &Require(const json &obj, const char *key, std::string_view where)
{
  auto it = obj.find(key);
  if (it == obj.end())
  {
    throw ConfigError(fmt::format("{}: missing key \"{}\"", where, key));
  }
  return *it;
}

double RequireNumber(const json &obj, const char *key, std::string_view where)
{
  const auto &v = Require(obj, key, where);
  if (!v.is_number())
  {
    throw ConfigError(fmt::format("{}: \"{}\" must be a number", where, key));
  }
  return v.get<double>();
}

}  // namespace

void WriteGrid(const fs::path &sidecar, const Vec3 &origin, double voxel,
               std::array<std::size_t, 3> dims, std::span<const cplx> data)
{
  if (data.size() != dims[0] * dims[1] * dims[2])
  {
    throw ConfigError("grid data size does not match dimensions");
  }
  fs::path bin = sidecar;
  bin.replace_extension(".bin");
  json meta;
  meta["dims"] = json::array({dims[0], dims[1], dims[2]});
  meta["origin"] = VecToJson(origin);
  meta["voxel"] = voxel;
  meta["data"] = bin.filename().string();
  meta["layout"] = "row-major, z fastest, interleaved float64 (re, im), little-endian";
  WriteComplexArray(bin, data);
  WriteFileAtomic(sidecar, meta.dump(2) + "\n");
}

FieldSpec ReadGrid(const fs::path &sidecar)
{
  const std::string where = sidecar.string();
  json meta;
  try
  {
    meta = json::parse(ReadFile(sidecar));
  }
  catch (const json::parse_error &e)
  {
    throw ConfigError(fmt::format("{}: {}", where, e.what()));
  }
  RequireKnownKeys(meta, {"dims", "origin", "voxel", "data", "layout"}, where);
  const auto &d = Require(meta, "dims", where);
  if (!d.is_array() || d.size() != 3)
  {
    throw ConfigError(fmt::format("{}: dims must have three entries", where));
  }
  std::array<std::size_t, 3> dims{};
  for (int i = 0; i < 3; i++)
  {
    if (!d[i].is_number_integer() || d[i].get<long long>() <= 0)
    {
      throw ConfigError(fmt::format("{}: dims must be positive integers", where));
    }
    dims[i] = d[i].get<std::size_t>();
  }
  const auto bin = sidecar.parent_path() / Require(meta, "data", where).get<std::string>();
  return FieldSpec::Grid(VecFromJson(Require(meta, "origin", where)),
                         RequireNumber(meta, "voxel", where), dims, ReadComplexArray(bin),
                         sidecar.string());
}

FieldSpec FieldFromJson(const json &j, const fs::path &base_dir)
{
  if (j.is_number() || j.is_array())
  {
    return FieldSpec::Constant(ComplexFromJson(j));
  }
  const std::string where = "field";
  const auto &type_json = Require(j, "type", where);
  if (!type_json.is_string())
  {
    throw ConfigError("field: \"type\" must be a string");
  }
  const auto type = type_json.get<std::string>();
  const std::string w = "field \"" + type + "\"";
  if (type == "constant")
  {
    RequireKnownKeys(j, {"type", "value"}, w);
    return FieldSpec::Constant(ComplexFromJson(Require(j, "value", w)));
  }
  if (type == "ball_step")
  {
    RequireKnownKeys(j, {"type", "center", "radius", "inside", "outside"}, w);
    return FieldSpec::BallStep(VecFromJson(Require(j, "center", w)),
                               RequireNumber(j, "radius", w),
                               ComplexFromJson(Require(j, "inside", w)),
                               ComplexFromJson(Require(j, "outside", w)));
  }
  if (type == "radial_bump")
  {
    RequireKnownKeys(j, {"type", "center", "radius", "amplitude", "exponent"}, w);
    const auto &e = Require(j, "exponent", w);
    if (!e.is_number_integer())
    {
      throw ConfigError(w + ": exponent must be an integer");
    }
    return FieldSpec::RadialBump(VecFromJson(Require(j, "center", w)),
                                 RequireNumber(j, "radius", w),
                                 ComplexFromJson(Require(j, "amplitude", w)), e.get<int>());
  }
  if (type == "grid")
  {
    RequireKnownKeys(j, {"type", "sidecar"}, w);
    fs::path path = Require(j, "sidecar", w).get<std::string>();
    if (path.is_relative())
    {
      path = base_dir / path;
    }
    return ReadGrid(path);
  }
  if (type == "sum")
  {
    RequireKnownKeys(j, {"type", "terms"}, w);
    const auto &terms = Require(j, "terms", w);
    if (!terms.is_array())
    {
      throw ConfigError(w + ": terms must be an array");
    }
    std::vector<FieldSpec> parts;
    for (const auto &t : terms)
    {
      parts.push_back(FieldFromJson(t, base_dir));
    }
    return FieldSpec::Sum(std::move(parts));
  }
  if (type == "scale")
  {
    RequireKnownKeys(j, {"type", "factor", "field"}, w);
    return FieldSpec::Scale(ComplexFromJson(Require(j, "factor", w)),
                            FieldFromJson(Require(j, "field", w), base_dir));
  }
  if (type == "quotient")
  {
    RequireKnownKeys(j, {"type", "numerator", "denominator"}, w);
    return FieldSpec::Quotient(FieldFromJson(Require(j, "numerator", w), base_dir),
                               FieldFromJson(Require(j, "denominator", w), base_dir));
  }
  throw ConfigError(fmt::format("unknown field type \"{}\"", type));
}

namespace
{

struct ToJson
{
  json operator()(const field::Constant &f) const
  {
    return {{"type", "constant"}, {"value", ComplexToJson(f.value)}};
  }
  json operator()(const field::BallStep &f) const
  {
    return {{"type", "ball_step"},
            {"center", VecToJson(f.center)},
            {"radius", f.radius},
            {"inside", ComplexToJson(f.inside)},
            {"outside", ComplexToJson(f.outside)}};
  }
  json operator()(const field::RadialBump &f) const
  {
    return {{"type", "radial_bump"},
            {"center", VecToJson(f.center)},
            {"radius", f.radius},
            {"amplitude", ComplexToJson(f.amplitude)},
            {"exponent", f.exponent}};
  }
  json operator()(const field::GridSampled &f) const
  {
    if (f.sidecar.empty())
    {
      throw ConfigError("in-memory grid field has no sidecar file; save it with WriteGrid");
    }
    return {{"type", "grid"}, {"sidecar", f.sidecar}};
  }
  json operator()(const field::Sum &f) const
  {
    json terms = json::array();
    for (const auto &t : f.terms)
    {
      terms.push_back(FieldToJson(t));
    }
    return {{"type", "sum"}, {"terms", terms}};
  }
  json operator()(const field::Scale &f) const
  {
    return {{"type", "scale"},
            {"factor", ComplexToJson(f.factor)},
            {"field", FieldToJson(f.inner.front())}};
  }
  json operator()(const field::Quotient &f) const
  {
    return {{"type", "quotient"},
            {"numerator", FieldToJson(f.parts[0])},
            {"denominator", FieldToJson(f.parts[1])}};
  }
};

}  // namespace

json FieldToJson(const FieldSpec &f)
{
  return std::visit(ToJson{}, f.Node());
}

}  // namespace metamat
