#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "consensus.hpp"
#include "hsmm.hpp"

namespace sdev {

// A trained model together with the observation alphabet it was fit on.
struct Detector {
    HsmmModel model;
    ObservationAlphabet alphabet;
    std::uint64_t vocabulary_hash = 0;
    DecodeMode decode_mode = DecodeMode::Viterbi;
};

std::string detector_to_json(const Detector& d);
Detector detector_from_json(std::string_view text);

}  // namespace sdev
