// Partial-order toolbox walkthrough: thickness, minimum chain cover and the
// crash frontier an ordered adversary is allowed to touch.

#include <iostream>

#include "consim/poset.hpp"

int main() {
  using namespace consim;

  // a ~ 0, b ~ 1, c ~ 2, d ~ 3:  a<c, b<c, b<d
  PartialOrder order = PartialOrder::from_edges(4, {{0, 2}, {1, 2}, {1, 3}});
  std::cout << "thickness: " << thickness(order) << "\n";

  std::cout << "min chain cover:\n";
  for (const auto& chain : dilworth_cover(order)) {
    std::cout << "  ";
    for (std::size_t i = 0; i < chain.size(); ++i) std::cout << (i ? " < " : "") << chain[i];
    std::cout << "\n";
  }

  std::vector<bool> crashed(4, false);
  crashed[1] = true;  // b is down
  std::cout << "crash frontier after {b}: ";
  for (Pid p : legal_crash_candidates(order, crashed)) std::cout << p << " ";
  std::cout << "\n";

  PartialOrder chains = gen_k_chain_order(12, 3, 7);
  std::cout << "random 3-chain order over 12 elements, thickness "
            << chains.thickness() << ":\n" << chains.serialize();
  return 0;
}
