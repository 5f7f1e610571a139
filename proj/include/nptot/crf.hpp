// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace nptot {

// Sentinel passed for "open a new table" / "draw a new dish".
inline constexpr int kNew = -1;

struct SeatResult {
  int table = kNew;
  int dish = kNew;
  bool created_table = false;
  bool created_dish = false;
};

struct UnseatResult {
  int restaurant = 0;
  int table = kNew;
  int dish = kNew;
  bool removed_table = false;
  bool removed_dish = false;
};

// Chinese-restaurant-franchise count bookkeeping. Customers sit at tables
// within restaurants; every table serves one dish shared across the
// franchise. Table and dish ids grow monotonically and are never reused.
// Tables with zero customers and dishes with zero tables are deleted.
class Franchise {
 public:
  Franchise(double restaurant_concentration, double top_concentration);

  // table == kNew opens a table (dish names the dish it serves, kNew drawing
  // a fresh one); for an existing table the dish argument must be kNew or
  // match the table's dish.
  SeatResult seat(std::int64_t customer, int restaurant, int table, int dish = kNew);
  UnseatResult unseat(std::int64_t customer);

  // Unnormalized seating weights: n_ja per table, concentration for NEW.
  struct TablePrior {
    std::vector<std::pair<int, double>> tables;  // (table id, weight)
    double new_weight = 0.0;
  };
  TablePrior table_prior(int restaurant) const;

  // Unnormalized dish weights: m_k per dish, top concentration for NEW.
  struct DishPrior {
    std::vector<std::pair<int, double>> dishes;  // (dish id, weight)
    double new_weight = 0.0;
  };
  DishPrior dish_prior() const;

  // Dish reassignment of a whole table (Gibbs over table dishes). Detach
  // leaves the table temporarily dishless; attach must follow.
  int detach_table_dish(int table);           // returns the old dish
  int attach_table_dish(int table, int dish); // dish == kNew mints one; returns it

  bool has_table(int table) const { return tables_.count(table) != 0; }
  bool has_dish(int dish) const { return dish_tables_.count(dish) != 0; }
  int table_customers(int table) const;
  int table_restaurant(int table) const;
  int table_dish(int table) const;
  const std::vector<std::int64_t>& table_members(int table) const;
  int dish_table_count(int dish) const;          // m_.k
  int total_tables() const { return total_tables_; }  // m_..
  int restaurant_customers(int restaurant) const;
  std::int64_t total_customers() const { return static_cast<std::int64_t>(customer_table_.size()); }
  int customer_table(std::int64_t customer) const;  // kNew if unseated
  bool is_seated(std::int64_t customer) const { return customer_table_.count(customer) != 0; }

  const std::vector<int>& tables_of(int restaurant) const;
  std::vector<int> dish_ids() const;
  std::vector<int> restaurant_ids() const;
  const std::map<int, int>& dish_table_counts() const { return dish_tables_; }

  double restaurant_concentration() const { return alpha_; }
  double top_concentration() const { return top_; }

  int next_table_id() const { return next_table_; }
  int next_dish_id() const { return next_dish_; }

  // Throws NumericError if any count is inconsistent with the seat maps.
  void audit() const;

  // Serialization state (restored verbatim by from_state).
  struct TableState {
    int id, restaurant, dish;
    std::vector<std::int64_t> members;
  };
  struct State {
    double alpha, top;
    int next_table, next_dish;
    std::vector<TableState> tables;
  };
  State state() const;
  static Franchise from_state(const State& s);

 private:
  struct Table {
    int restaurant;
    int dish;
    std::vector<std::int64_t> members;
  };

  void drop_table(int table);

  double alpha_;
  double top_;
  int next_table_ = 0;
  int next_dish_ = 0;
  int total_tables_ = 0;
  std::map<int, Table> tables_;
  std::map<int, std::vector<int>> restaurant_tables_;  // creation order
  std::map<int, int> restaurant_customers_;
  std::map<int, int> dish_tables_;  // m_.k
  std::map<std::int64_t, int> customer_table_;
};

}  // namespace nptot
