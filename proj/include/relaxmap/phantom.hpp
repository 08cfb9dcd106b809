#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relaxmap/image.hpp"
#include "relaxmap/sampling.hpp"
#include "relaxmap/types.hpp"

namespace relaxmap {

// Y_ij: E echoes x J coils of centred k-space planes, echo-major.
struct KSpaceData {
  Index echoes = 0;
  Index coils = 0;
  std::vector<ComplexImage> planes;
  EchoPatternSet patterns;
  EchoTimes times;

  auto at(Index echo, Index coil) -> ComplexImage & { return planes[static_cast<std::size_t>(echo * coils + coil)]; }
  [[nodiscard]] auto at(Index echo, Index coil) const -> ComplexImage const &
  {
    return planes[static_cast<std::size_t>(echo * coils + coil)];
  }
  [[nodiscard]] auto rows() const -> Index { return planes.front().rows(); }
  [[nodiscard]] auto cols() const -> Index { return planes.front().cols(); }
  void validate() const;
};

struct Phantom {
  RealImage x0;     // spin density, 0 outside the support
  RealImage r2star; // 1/ms, 0 outside the support
  RealEchoSet theta;
  RealImage support; // {0, 1}
};

struct AcquisitionSpec {
  EchoTimes times;
  CoilSet coils;
  EchoPatternSet patterns;
  double noise_sigma = 0.0; // std of the complex noise per k-space sample
};

enum class PhantomPreset { shepp_like, blocks, random_smooth };

auto preset_name(PhantomPreset p) -> std::string;
auto parse_preset(std::string const &name) -> PhantomPreset;

// X_i = X0 exp(-t_i R2*).
auto decay_images(Phantom const &phantom, EchoTimes const &times) -> RealEchoSet;

// Z_i X_i with the phantom's phase at each echo. Needs one phase map per time.
auto echo_images(Phantom const &phantom, EchoTimes const &times) -> ComplexEchoSet;

// Y_ij = P_i F (S_j Z_i X_i) + noise on sampled entries. Each plane draws its
// noise from its own stream, so the result depends only on the seed.
auto simulate_kspace(Phantom const &phantom, AcquisitionSpec const &spec, std::uint64_t seed) -> KSpaceData;

// Smooth Gaussian-lobe sensitivities with a linear phase ramp each, lobes
// centred on the image border (one centred lobe when J = 1). The largest
// root-sum-of-squares value is 1.
auto synth_coils(Index rows, Index cols, Index coils) -> CoilSet;

auto truncate_echoes(KSpaceData const &data, Index keep) -> KSpaceData;

template <typename T>
auto truncate_echoes(MultiEchoSet<T> const &set, Index keep) -> MultiEchoSet<T>
{
  set.validate();
  auto times = set.times.first(keep);
  return {std::vector<Image<T>>(set.echoes.begin(), set.echoes.begin() + keep), std::move(times)};
}

// Phase maps are generated for `phase_times`; pass the acquisition's echo
// times so that theta has one map per echo.
auto make_phantom(Index rows, Index cols, PhantomPreset preset, std::uint64_t seed, EchoTimes const &phase_times)
  -> Phantom;

} // namespace relaxmap
