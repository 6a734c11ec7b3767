#include "lcm/binary_io.hpp"
#include "lcm/dp_solver.hpp"

// File layout (all integers and floats little-endian):
//   char[8]  "LCMVGRID"
//   u32      format version (1)
//   u64      config hash
//   i32      start_age, end_age
//   u32      layer count (end_age - start_age + 1)
//   i32      n_pension, n_prev_wage, n_tis, n_wage, quadrature_nodes
//   f64      pension_origin, pension_step, prev_wage_origin, prev_wage_step,
//            wage_origin, wage_step                      (e/month)
//   i32      map_prev_wage_knot, map_tis_knot
//   f64[layers * L]       values, layer-major, each layer row-major over
//                         (employment, pension, prev_wage, tis, wage)
//   u8[(layers - 1) * L]  greedy action codes for the decision layers
// where L = 3 * n_pension * n_prev_wage * n_tis * n_wage.

namespace lcm {

namespace {
constexpr char kMagic[9] = "LCMVGRID";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_value_grid(const ValueGrid& vg, const std::filesystem::path& path) {
  binary::Writer out(path);
  const auto& g = vg.grid();
  out.bytes(kMagic, 8);
  out.put<std::uint32_t>(kVersion);
  out.put<std::uint64_t>(vg.config_hash());
  out.put<std::int32_t>(vg.start_age());
  out.put<std::int32_t>(vg.end_age());
  out.put<std::uint32_t>(static_cast<std::uint32_t>(vg.layer_count()));
  for (int v : {g.n_pension, g.n_prev_wage, g.n_tis, g.n_wage, g.quadrature_nodes}) out.put<std::int32_t>(v);
  for (double v : {g.pension_origin, g.pension_step, g.prev_wage_origin, g.prev_wage_step, g.wage_origin, g.wage_step})
    out.put<double>(v);
  out.put<std::int32_t>(g.map_prev_wage_knot);
  out.put<std::int32_t>(g.map_tis_knot);
  out.put_all(vg.values());
  out.put_all(vg.actions());
  out.finish();
}

ValueGrid load_value_grid(const std::filesystem::path& path) {
  binary::Reader in(path);
  in.expect_magic(kMagic);
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion)
    throw binary::FormatError(path.string() + ": unsupported value grid version " + std::to_string(version));
  const auto hash = in.get<std::uint64_t>();
  const int start = in.get<std::int32_t>();
  const int end = in.get<std::int32_t>();
  const auto layers = in.get<std::uint32_t>();
  if (end <= start || static_cast<int>(layers) != end - start + 1)
    throw binary::FormatError(path.string() + ": inconsistent layer count");
  GridSpec g;
  g.n_pension = in.get<std::int32_t>();
  g.n_prev_wage = in.get<std::int32_t>();
  g.n_tis = in.get<std::int32_t>();
  g.n_wage = in.get<std::int32_t>();
  g.quadrature_nodes = in.get<std::int32_t>();
  g.pension_origin = in.get<double>();
  g.pension_step = in.get<double>();
  g.prev_wage_origin = in.get<double>();
  g.prev_wage_step = in.get<double>();
  g.wage_origin = in.get<double>();
  g.wage_step = in.get<double>();
  g.map_prev_wage_knot = in.get<std::int32_t>();
  g.map_tis_knot = in.get<std::int32_t>();
  try {
    validate(g);
  } catch (const ConfigError& e) {
    throw binary::FormatError(path.string() + ": bad grid header (" + e.what() + ")");
  }
  ValueGrid vg(g, start, end, hash);
  const auto values = in.get_all<double>(vg.values().size());
  const auto actions = in.get_all<std::uint8_t>(vg.actions().size());
  in.expect_end();
  for (int age = start; age <= end; ++age) {
    auto dst = vg.layer(age);
    std::copy_n(values.begin() + (age - start) * vg.layer_size(), vg.layer_size(), dst.begin());
  }
  for (int age = start; age < end; ++age) {
    auto dst = vg.action_layer(age);
    std::copy_n(actions.begin() + (age - start) * vg.layer_size(), vg.layer_size(), dst.begin());
    for (auto a : dst)
      if (a >= kActionCount) throw binary::FormatError(path.string() + ": bad action code");
  }
  return vg;
}

}  // namespace lcm
