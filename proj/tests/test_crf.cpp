// Apache License, Version 2.0, refer to LICENSE.txt

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <string>

#include "nptot/crf.hpp"
#include "nptot/errors.hpp"
#include "nptot/rng.hpp"
#include "oracles.hpp"

using namespace nptot;

TEST_CASE("first customer opens one table and one dish") {
  Franchise f(1.0, 1.0);
  SeatResult r = f.seat(0, 0, kNew, kNew);
  CHECK(r.created_table);
  CHECK(r.created_dish);
  CHECK(f.table_customers(r.table) == 1);
  CHECK(f.total_tables() == 1);
  CHECK(f.dish_table_count(r.dish) == 1);
  CHECK(f.total_customers() == 1);
}

TEST_CASE("three customers at one table") {
  Franchise f(1.0, 1.0);
  SeatResult r = f.seat(0, 2, kNew, kNew);
  f.seat(1, 2, r.table);
  f.seat(2, 2, r.table);
  CHECK(f.table_customers(r.table) == 3);
  CHECK(f.total_tables() == 1);
  CHECK(f.restaurant_customers(2) == 3);
  f.audit();
}

TEST_CASE("two tables sharing a dish") {
  Franchise f(1.0, 1.0);
  SeatResult a = f.seat(0, 0, kNew, kNew);
  SeatResult b = f.seat(1, 1, kNew, a.dish);
  CHECK(b.created_table);
  CHECK_FALSE(b.created_dish);
  CHECK(f.dish_table_count(a.dish) == 2);
  CHECK(f.total_tables() == 2);
}

TEST_CASE("unseat mirrors seat") {
  Franchise f(1.0, 1.0);
  SeatResult r = f.seat(0, 0, kNew, kNew);
  UnseatResult u = f.unseat(0);
  CHECK(u.removed_table);
  CHECK(u.removed_dish);
  CHECK(f.total_tables() == 0);
  CHECK(f.total_customers() == 0);
  CHECK(f.dish_ids().empty());
  CHECK_THROWS_AS(f.unseat(0), NumericError);

  // last customer of a 2-table dish
  SeatResult a = f.seat(10, 0, kNew, kNew);
  SeatResult b = f.seat(11, 1, kNew, a.dish);
  f.unseat(11);
  CHECK(f.dish_table_count(a.dish) == 1);

  // sole customer of the sole table of a dish removes the dish
  SeatResult c = f.seat(12, 2, kNew, kNew);
  f.unseat(12);
  CHECK_FALSE(f.has_dish(c.dish));
  f.audit();
}

TEST_CASE("seating at a removed table is rejected") {
  Franchise f(1.0, 1.0);
  SeatResult r = f.seat(0, 0, kNew, kNew);
  f.unseat(0);
  CHECK_THROWS_AS(f.seat(1, 0, r.table), NumericError);
}

TEST_CASE("table prior lists customer counts and the concentration") {
  Franchise f(1.0, 0.5);
  auto empty = f.table_prior(0);
  CHECK(empty.tables.empty());
  CHECK(empty.new_weight == 1.0);

  SeatResult a = f.seat(0, 0, kNew, kNew);
  f.seat(1, 0, a.table);
  f.seat(2, 0, a.table);
  SeatResult b = f.seat(3, 0, kNew, a.dish);
  auto prior = f.table_prior(0);
  REQUIRE(prior.tables.size() == 2);
  double total = prior.new_weight;
  std::map<int, double> w;
  for (auto& [table, weight] : prior.tables) {
    w[table] = weight;
    total += weight;
  }
  CHECK(w[a.table] == 3.0);
  CHECK(w[b.table] == 1.0);
  CHECK(prior.new_weight / total == doctest::Approx(0.2));  // alpha0 = 1 over 3+1+1

  Franchise zero(0.0, 1.0);
  zero.seat(0, 0, kNew, kNew);
  CHECK(zero.table_prior(0).new_weight == 0.0);
}

TEST_CASE("dish prior lists table counts and the concentration") {
  Franchise f(1.0, 5.0);
  auto empty = f.dish_prior();
  CHECK(empty.dishes.empty());
  CHECK(empty.new_weight == 5.0);  // only NEW: probability one

  // m = (4, 1)
  SeatResult a = f.seat(0, 0, kNew, kNew);
  f.seat(1, 1, kNew, a.dish);
  f.seat(2, 2, kNew, a.dish);
  f.seat(3, 3, kNew, a.dish);
  SeatResult b = f.seat(4, 0, kNew, kNew);
  auto prior = f.dish_prior();
  REQUIRE(prior.dishes.size() == 2);
  const double norm = f.total_tables() + 5.0;
  std::map<int, double> w;
  for (auto& [dish, weight] : prior.dishes) w[dish] = weight;
  CHECK(w[a.dish] / norm == doctest::Approx(0.4));
  CHECK(w[b.dish] / norm == doctest::Approx(0.1));
  CHECK(prior.new_weight / norm == doctest::Approx(0.5));

  Franchise zero(1.0, 0.0);
  zero.seat(0, 0, kNew, kNew);
  CHECK(zero.dish_prior().new_weight == 0.0);
}

TEST_CASE("audit holds under random seat/unseat traffic") {
  Rng rng(13);
  Franchise f(0.7, 1.3);
  std::vector<std::int64_t> seated;
  for (int step = 0; step < 20000; ++step) {
    if (seated.empty() || rng.uniform() < 0.55) {
      const std::int64_t cust = step;
      const int rest = static_cast<int>(rng.below(4));
      auto prior = f.table_prior(rest);
      const std::size_t pick = rng.below(prior.tables.size() + 1);
      if (pick < prior.tables.size()) {
        f.seat(cust, rest, prior.tables[pick].first);
      } else {
        auto dishes = f.dish_prior();
        const std::size_t dpick = rng.below(dishes.dishes.size() + 1);
        f.seat(cust, rest, kNew,
               dpick < dishes.dishes.size() ? dishes.dishes[dpick].first : kNew);
      }
      seated.push_back(cust);
    } else {
      const std::size_t i = rng.below(seated.size());
      f.unseat(seated[i]);
      seated.erase(seated.begin() + i);
    }
    if (step % 1000 == 0) f.audit();
  }
  f.audit();
}

TEST_CASE("sequential CRP seating reproduces exact partition probabilities") {
  // 4 customers, one restaurant; compare empirical labeled-partition
  // frequencies against the closed form within 3 standard errors.
  const double alpha = 1.0;
  const int n = 4;
  const int draws = 200000;
  Rng rng(101);
  std::map<std::string, int> freq;
  for (int d = 0; d < draws; ++d) {
    Franchise f(alpha, 1.0);
    std::vector<int> table_of(n);
    for (int c = 0; c < n; ++c) {
      auto prior = f.table_prior(0);
      double total = prior.new_weight;
      for (auto& [table, w] : prior.tables) total += w;
      double u = rng.uniform() * total;
      int chosen = kNew;
      for (auto& [table, w] : prior.tables) {
        u -= w;
        if (u < 0.0) {
          chosen = table;
          break;
        }
      }
      SeatResult r = chosen == kNew ? f.seat(c, 0, kNew, kNew) : f.seat(c, 0, chosen);
      table_of[c] = r.table;
    }
    // canonical partition label
    std::map<int, int> rename;
    std::string key;
    for (int c = 0; c < n; ++c) {
      auto [it, fresh] = rename.try_emplace(table_of[c], static_cast<int>(rename.size()));
      key.push_back(static_cast<char>('0' + it->second));
    }
    ++freq[key];
  }
  int checked = 0;
  for (const auto& rgs : oracle::set_partitions(n)) {
    std::string key;
    for (int b : rgs) key.push_back(static_cast<char>('0' + b));
    const double p = std::exp(oracle::crp_log_prob(alpha, oracle::block_sizes(rgs)));
    const double se = std::sqrt(p * (1.0 - p) / draws);
    const double emp = static_cast<double>(freq[key]) / draws;
    CHECK(std::abs(emp - p) <= 3.0 * se + 1e-12);
    ++checked;
  }
  CHECK(checked == 15);
}

TEST_CASE("state round trip preserves every count") {
  Rng rng(19);
  Franchise f(1.0, 2.0);
  for (int c = 0; c < 500; ++c) {
    const int rest = static_cast<int>(rng.below(5));
    auto prior = f.table_prior(rest);
    const std::size_t pick = rng.below(prior.tables.size() + 1);
    if (pick < prior.tables.size()) {
      f.seat(c, rest, prior.tables[pick].first);
    } else {
      auto dishes = f.dish_prior();
      const std::size_t dpick = rng.below(dishes.dishes.size() + 1);
      f.seat(c, rest, kNew, dpick < dishes.dishes.size() ? dishes.dishes[dpick].first : kNew);
    }
  }
  Franchise g = Franchise::from_state(f.state());
  g.audit();
  CHECK(g.total_tables() == f.total_tables());
  CHECK(g.total_customers() == f.total_customers());
  CHECK(g.dish_ids() == f.dish_ids());
  for (int c = 0; c < 500; ++c) CHECK(g.customer_table(c) == f.customer_table(c));
  for (int dish : f.dish_ids()) CHECK(g.dish_table_count(dish) == f.dish_table_count(dish));
  CHECK(g.next_table_id() == f.next_table_id());
  CHECK(g.next_dish_id() == f.next_dish_id());
}

TEST_CASE("detach and attach move a table between dishes") {
  Franchise f(1.0, 1.0);
  SeatResult a = f.seat(0, 0, kNew, kNew);
  SeatResult b = f.seat(1, 1, kNew, kNew);
  const int old = f.detach_table_dish(a.table);
  CHECK(old == a.dish);
  CHECK_FALSE(f.has_dish(a.dish));  // sole table left the dish
  const int moved = f.attach_table_dish(a.table, b.dish);
  CHECK(moved == b.dish);
  CHECK(f.dish_table_count(b.dish) == 2);
  f.audit();
}
