#pragma once

#include <iosfwd>
#include <string>

#include "plotsteal/nn.hpp"

namespace plotsteal {

// Versioned binary model record: dims, activation kind and row-major weights.
// Doubles are stored as raw little-endian IEEE-754 bits, so the round trip is
// bit-exact.
void save_model(const FeedforwardNet& net, std::ostream& out);
void save_model(const FeedforwardNet& net, const std::string& path);

FeedforwardNet load_model(std::istream& in);
FeedforwardNet load_model(const std::string& path);

}  // namespace plotsteal
