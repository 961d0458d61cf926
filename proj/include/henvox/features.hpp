#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "henvox/audio_io.hpp"
#include "henvox/labels.hpp"
#include "henvox/vad.hpp"

namespace hv {

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kTimeFeatureDim = 5;      // tempo, energy, intensity, power, pitch
inline constexpr int kSpectralFeatureDim = 5;  // F1..F4, log spectral energy
inline constexpr int kCepstralDim = 40;

enum class FilterScale { Mel, Linear };
enum class CepstralKind { MFCC, LFCC, Fused };
// Orthonormal DCT-II (MFCC) or the plain cosine sum sum_i X_i cos(j(i-1/2)pi/B) (LFCC).
enum class DctKind { Orthonormal, Unnormalized };

struct FeatureOptions {
  double mel_divisor = 100.0;  // 700 gives the conventional mel scale
  std::size_t nfft = 512;
  double frame_ms = 20.0;
  double hop_ms = 10.0;
  int num_filters = 40;
  int num_coeffs = 40;
  double pitch_min_hz = 100.0;
  double pitch_max_hz = 3000.0;
  int lpc_order = 18;
  double pre_emphasis = 0.97;
  double max_formant_bandwidth_hz = 400.0;
  VadConfig vad;

  void validate() const;
};

struct CepstralMatrix {
  RowMatrix values;  // num_frames x num_coeffs
  CepstralKind kind = CepstralKind::MFCC;
};

struct SpectralEnergy {
  std::vector<double> bins;  // |X(k)|^2 for k = 0..nfft/2
  std::size_t nfft = 0;
  double log_total = 0.0;    // log(sum over the two-sided spectrum + eps)
};

// One clip's three parallel input channels.
struct MultiChannelFeatures {
  std::string clip_id;
  FeatureMatrix time;      // syllables x 5
  FeatureMatrix spectral;  // syllables x 5
  FeatureMatrix cepstral;  // frames x 80 (MFCC columns first)
  std::optional<LabelVector> label;

  bool has_syllables() const { return time.rows() > 0; }
};

double mel_scale(double hz, double divisor = 100.0);
double inverse_mel_scale(double mel, double divisor = 100.0);

// num_filters x (nfft/2 + 1). Every row peaks at exactly 1.0; a filter too
// narrow to contain any bin is assigned the bin nearest its centre.
RowMatrix triangular_filterbank(int num_filters, std::size_t nfft, int sample_rate,
                                FilterScale scale, double mel_divisor = 100.0);

// Cosine transform of one vector of log filter energies.
std::vector<double> dct(std::span<const double> log_energies, int num_coeffs, DctKind kind);

// Power spectrum -> filterbank -> log (floor 1e-10) -> cosine transform, per frame.
RowMatrix cepstrum(const FrameSequence& frames, const RowMatrix& filterbank, std::size_t nfft,
                   int num_coeffs, DctKind kind);

CepstralMatrix mfcc(const FrameSequence& frames, const FeatureOptions& opts = {});
CepstralMatrix lfcc(const FrameSequence& frames, const FeatureOptions& opts = {});
CepstralMatrix fuse_cepstral(const CepstralMatrix& mfcc, const CepstralMatrix& lfcc);

SpectralEnergy spectral_energy(std::span<const float> segment);

// Autocorrelation pitch in Hz; 0 when unvoiced.
double pitch(std::span<const float> segment, int sample_rate, double f_min, double f_max);

// LPC formants F1..F4 in Hz; unresolved slots are 0.
std::array<double, 4> formants(std::span<const float> segment, int sample_rate,
                               const FeatureOptions& opts = {});

FeatureMatrix time_features(const AudioClip& clip, const std::vector<SyllableSegment>& syllables,
                            const FeatureOptions& opts = {});
FeatureMatrix spectral_features(const AudioClip& clip, const std::vector<SyllableSegment>& syllables,
                                const FeatureOptions& opts = {});

// Segments, then computes all three channels. A clip without syllables yields
// empty time/spectral channels; callers exclude it from training.
MultiChannelFeatures extract_features(const AudioClip& clip, const FeatureOptions& opts = {});

}  // namespace hv
