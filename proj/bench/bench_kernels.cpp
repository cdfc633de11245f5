// Serial reference against the OpenMP kernels: trial battery and the
// all-pairs contact check.

#include <benchmark/benchmark.h>

#include <random>

#include "harbour/dynamics/ship_config.hpp"
#include "harbour/port/port.hpp"
#include "harbour/trials/trials.hpp"

using namespace harbour;

namespace {

const std::string kData = HARBOUR_DATA_DIR;

const dynamics::ShipConfig& ship() {
  static const auto c = dynamics::load_ship_config(kData + "/ships/kriso.cfg");
  return c;
}

std::vector<trials::TrialSpec> battery(int copies) {
  std::vector<trials::TrialSpec> specs;
  for (int i = 0; i < copies; ++i) {
    for (auto s : trials::reference_battery()) {
      s.dt = 0.05;
      specs.push_back(s);
    }
  }
  return specs;
}

template <auto Run>
void BM_Battery(benchmark::State& st) {
  const auto specs = battery(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(Run(specs, ship(), dynamics::Environment{}));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(specs.size()));
}

// A crowded anchorage: ships scattered over the roads, some touching.
std::vector<port::Footprint> fleet(int n) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> x(-3000, -1000), y(0, 4000), h(0, 6.283);
  std::vector<port::Footprint> f;
  for (int i = 0; i < n; ++i) f.push_back({"s" + std::to_string(i), {x(rng), y(rng)}, h(rng), 230, 32.2});
  return f;
}

template <auto Check>
void BM_Collision(benchmark::State& st) {
  static const auto geo = port::load_geo(kData + "/ports/salerno.geo");
  const auto ships = fleet(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(Check(ships, geo, 0.0));
  st.SetItemsProcessed(st.iterations() * st.range(0) * (st.range(0) - 1) / 2);
}

}  // namespace

BENCHMARK(BM_Battery<trials::run_battery_serial>)->Name("battery/serial")->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Battery<trials::run_battery>)->Name("battery/openmp")->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Collision<port::check_collision_serial>)->Name("collision/serial")->Arg(64)->Arg(512)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Collision<port::check_collision>)->Name("collision/openmp")->Arg(64)->Arg(512)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
