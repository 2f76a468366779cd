// Writes the deterministic fixtures used by the tests and examples.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "surgcurate/error.hpp"
#include "surgcurate_app/fixtures.hpp"

namespace fx = surgcurate::fixtures;

int main(int argc, char** argv) {
  CLI::App cli{"Fixture generator", "surgcurate-fixture"};
  cli.require_subcommand(1);
  std::string out;
  std::uint64_t seed = 7;

  auto* pipeline = cli.add_subcommand("pipeline", "2,000-clip corpus, blobs, ids, clinical pool and store");
  pipeline->add_option("--out", out, "output directory")->required();
  pipeline->add_option("--seed", seed, "generator seed")->capture_default_str();
  auto* four = cli.add_subcommand("four-blob", "40/40/40/280 two-dimensional blob store");
  four->add_option("--out", out, "output store file")->required();
  auto* totals = cli.add_subcommand("inventory-totals", "video manifest with the published inventory totals");
  totals->add_option("--out", out, "output manifest")->required();
  auto* subset = cli.add_subcommand("public-subset", "video manifest of the public clinical subset");
  subset->add_option("--out", out, "output manifest")->required();

  CLI11_PARSE(cli, argc, argv);
  try {
    if (pipeline->parsed()) {
      fx::write_pipeline_fixture(fx::make_pipeline_fixture(seed), out);
    } else if (four->parsed()) {
      surgcurate::write_store(fx::make_four_blob_fixture(), out);
    } else {
      std::ofstream file(out, std::ios::binary);
      surgcurate::write_manifest(file, totals->parsed() ? fx::make_inventory_totals_manifest()
                                                        : fx::make_public_subset_manifest());
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 0;
}
