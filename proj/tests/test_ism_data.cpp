#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "tajima/ism_data.hpp"

using namespace tajima;

TEST_CASE("three-gamete check") {
  IncidenceMatrix y;
  y.rows = {{1, 1, 0}, {1, 0, 1}, {0, 1, 1}, {0, 0, 0}};
  auto r = check_ism(y);
  CHECK_FALSE(r.ok);
  CHECK(r.conflicts == std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}});
  CHECK(remove_ism_conflicts(y) == std::vector<int>{0, 1});
  CHECK(check_ism(oracle::fig4_data().y1).ok);
  CHECK(check_ism(oracle::intro_data().y1).ok);
}

TEST_CASE("phylogeny of the two-group example") {
  auto d = oracle::fig4_data();
  auto t = build_perfect_phylogeny(d.y1, d.y2, d.sched);
  CHECK(t.total_mutations() == 6);
  CHECK(t.nodes[0].size == 10);
  CHECK(t.nodes[0].group_counts == std::vector<int>{7, 3});
  // Root children: the c clade, the b leaf, the e leaf and the ancestral leaves.
  int clade = -1;
  for (int c : t.nodes[0].children)
    if (!t.nodes[c].is_leaf()) clade = c;
  REQUIRE(clade >= 0);
  CHECK(t.nodes[clade].edge_mutations == 1);
  CHECK(t.nodes[clade].size == 4);
  CHECK(t.nodes[clade].group_counts == std::vector<int>{3, 1});
  CHECK(compute_constraints(t) == std::vector<int>{0, 5});

  auto [y1, y2] = incidence_from_phylogeny(t);
  auto t2 = build_perfect_phylogeny(y1, y2, d.sched);
  CHECK(oracle::canonical_phylogeny(t) == oracle::canonical_phylogeny(t2));
}

TEST_CASE("effective tree splits mutation-free leaves") {
  auto d = oracle::intro_data();
  auto t = build_perfect_phylogeny(d.y1, d.y2, d.sched);
  auto e = t.effective();
  CHECK(e.size() == t.size() + 2);
  int singles = 0;
  for (int x = 0; x < e.size(); ++x)
    if (e.nodes[x].is_leaf()) {
      if (e.nodes[x].edge_mutations == 0) CHECK(e.nodes[x].size == 1);
      singles += e.nodes[x].size;
    }
  CHECK(singles == 6);
  for (int x = 0; x < t.size(); ++x) CHECK(e.nodes[x].edge_mutations == t.nodes[x].edge_mutations);
  CHECK(compute_constraints(t) == std::vector<int>{0});
}

TEST_CASE("ISM violations are rejected") {
  IncidenceMatrix y;
  y.rows = {{1, 1}, {1, 0}, {0, 1}, {0, 0}};
  FrequencyMatrix f{{{1}, {1}, {1}, {1}}};
  CHECK_THROWS_AS(build_perfect_phylogeny(y, f, SamplingSchedule::isochronous(4)), DataError);
  FrequencyMatrix bad{{{1}, {1}, {1}, {2}}};
  y.rows = {{1, 1}, {1, 0}, {0, 0}, {0, 0}};
  CHECK_THROWS_AS(build_perfect_phylogeny(y, bad, SamplingSchedule::isochronous(4)), DataError);
}

TEST_CASE("CSV round trip") {
  auto d = oracle::fig4_data();
  auto y1 = incidence_from_csv(incidence_to_csv(d.y1));
  CHECK(y1.rows == d.y1.rows);
  CHECK(y1.site_ids == d.y1.site_ids);
  CHECK(y1.haplotype_ids == d.y1.haplotype_ids);
  auto [y2, s] = frequency_from_csv(frequency_to_csv(d.y2, d.sched, d.y1.haplotype_ids));
  CHECK(y2.counts == d.y2.counts);
  CHECK(s.s == d.sched.s);
  CHECK(s.n == d.sched.n);
  CHECK_THROWS_AS(incidence_from_csv("haplotype,a\nh1,2\n"), DataError);
}

TEST_CASE("FASTA ingest") {
  const std::string fasta =
      ">s1\nACGTAC\n>s2\nACGTAA\n>s3\nTCGTAA\n>s4\nACGAAN\n>s5\nACGTAC\n";
  auto seqs = parse_fasta(fasta);
  REQUIRE(seqs.size() == 5);
  CHECK(seqs[3].seq == "ACGAAN");
  auto dates = parse_metadata_csv("sequence_id,date\ns1,2020.5\ns2,2020.5\ns3,2020-01-01\ns4,2019.5\ns5,2019.5\n");
  CHECK(dates[2].second == doctest::Approx(2020.0));
  auto r = ingest_alignment(seqs, "ACGTAC", dates);
  CHECK(r.ambiguous_sites == std::vector<int>{5});
  CHECK(r.dropped_sites.empty());
  CHECK(r.y1.z() == 2);  // columns 1 and 4
  CHECK(r.y1.site_ids == std::vector<std::string>{"1", "4"});
  CHECK(r.schedule.s.size() == 3);
  CHECK(r.schedule.s[1] == doctest::Approx(0.5));
  CHECK(r.schedule.s[2] == doctest::Approx(1.0));
  CHECK(r.schedule.n == std::vector<int>{2, 1, 2});
  CHECK(r.y1.k() == 3);

  // Majority ancestral state; a conflicting site is dropped.
  const std::string f2 = ">a\nAAA\n>b\nCAA\n>c\nCCA\n>d\nACA\n>e\nAAA\n>f\nAAC\n";
  auto d2 = parse_metadata_csv("id,date\na,1\nb,1\nc,1\nd,1\ne,1\nf,1\n");
  IngestOptions opt;
  opt.use_majority = true;
  auto r2 = ingest_alignment(parse_fasta(f2), "", d2, opt);
  CHECK(r2.dropped_sites.size() == 1);
  CHECK(check_ism(r2.y1).ok);
  CHECK_THROWS_AS(ingest_alignment(parse_fasta(">a\nAC\n>b\nA\n"), "AC", d2), DataError);
}
