#pragma once

#include <string>

#include "mdpsift/unfold.hpp"
#include "mdpsift/value.hpp"

namespace mdpsift {

// Writes the unfolded MDP as explicit space-separated transition files for
// consumption by probabilistic model checkers:
//   <prefix>.sta  node id, observed state, belief components, cost, kind
//   <prefix>.tra  source id, action, target id, probability (17 significant digits)
//   <prefix>.lab  node id, label (goal / unsafe)
// Column order is documented in '#' header lines inside each file.
void export_explicit(const UnfoldedMdp& mdp, const std::string& prefix);

// Reads the three files back into an UnfoldedMdp sufficient for value
// iteration (nodes, kinds, edges; node 0 is the root).  Probabilities parse
// back bit-exactly.
UnfoldedMdp import_explicit(const std::string& prefix);

}  // namespace mdpsift
