// Apache License, Version 2.0, refer to LICENSE.txt

#include "nptot/crf.hpp"

#include <algorithm>

#include "nptot/errors.hpp"

namespace nptot {

Franchise::Franchise(double restaurant_concentration, double top_concentration)
    : alpha_(restaurant_concentration), top_(top_concentration) {
  if (alpha_ < 0.0 || top_ < 0.0) {
    throw DataError("Franchise: concentrations must be nonnegative");
  }
}

SeatResult Franchise::seat(std::int64_t customer, int restaurant, int table, int dish) {
  if (customer_table_.count(customer)) {
    throw NumericError("Franchise: customer already seated");
  }
  SeatResult res;
  if (table == kNew) {
    if (dish == kNew) {
      dish = next_dish_++;
      dish_tables_[dish] = 0;
      res.created_dish = true;
    } else if (!dish_tables_.count(dish)) {
      throw NumericError("Franchise: new table at unknown dish");
    }
    table = next_table_++;
    tables_.emplace(table, Table{restaurant, dish, {}});
    restaurant_tables_[restaurant].push_back(table);
    ++dish_tables_[dish];
    ++total_tables_;
    res.created_table = true;
  } else {
    auto it = tables_.find(table);
    if (it == tables_.end()) throw NumericError("Franchise: seating at deleted table");
    if (it->second.restaurant != restaurant) {
      throw NumericError("Franchise: table belongs to another restaurant");
    }
    if (dish != kNew && dish != it->second.dish) {
      throw NumericError("Franchise: table already serves another dish");
    }
    dish = it->second.dish;
  }
  tables_[table].members.push_back(customer);
  customer_table_[customer] = table;
  ++restaurant_customers_[restaurant];
  res.table = table;
  res.dish = dish;
  return res;
}

UnseatResult Franchise::unseat(std::int64_t customer) {
  auto cit = customer_table_.find(customer);
  if (cit == customer_table_.end()) throw NumericError("Franchise: customer not seated");
  const int table = cit->second;
  Table& t = tables_.at(table);
  UnseatResult res;
  res.restaurant = t.restaurant;
  res.table = table;
  res.dish = t.dish;
  auto& members = t.members;
  members.erase(std::find(members.begin(), members.end(), customer));
  customer_table_.erase(cit);
  if (--restaurant_customers_[t.restaurant] == 0) restaurant_customers_.erase(t.restaurant);
  if (members.empty()) {
    res.removed_table = true;
    const int dish = t.dish;
    drop_table(table);
    if (--dish_tables_[dish] == 0) {
      dish_tables_.erase(dish);
      res.removed_dish = true;
    }
    --total_tables_;
  }
  return res;
}

void Franchise::drop_table(int table) {
  const Table& t = tables_.at(table);
  auto& list = restaurant_tables_[t.restaurant];
  list.erase(std::find(list.begin(), list.end(), table));
  if (list.empty()) restaurant_tables_.erase(t.restaurant);
  tables_.erase(table);
}

Franchise::TablePrior Franchise::table_prior(int restaurant) const {
  TablePrior p;
  auto it = restaurant_tables_.find(restaurant);
  if (it != restaurant_tables_.end()) {
    p.tables.reserve(it->second.size());
    for (int table : it->second) {
      p.tables.emplace_back(table, static_cast<double>(tables_.at(table).members.size()));
    }
  }
  p.new_weight = alpha_;
  return p;
}

Franchise::DishPrior Franchise::dish_prior() const {
  DishPrior p;
  p.dishes.reserve(dish_tables_.size());
  for (const auto& [dish, m] : dish_tables_) {
    p.dishes.emplace_back(dish, static_cast<double>(m));
  }
  p.new_weight = top_;
  return p;
}

int Franchise::detach_table_dish(int table) {
  auto it = tables_.find(table);
  if (it == tables_.end()) throw NumericError("Franchise: detach on deleted table");
  const int dish = it->second.dish;
  if (dish == kNew) throw NumericError("Franchise: table already detached");
  if (--dish_tables_[dish] == 0) dish_tables_.erase(dish);
  --total_tables_;
  it->second.dish = kNew;
  return dish;
}

int Franchise::attach_table_dish(int table, int dish) {
  auto it = tables_.find(table);
  if (it == tables_.end()) throw NumericError("Franchise: attach on deleted table");
  if (it->second.dish != kNew) throw NumericError("Franchise: table already has a dish");
  if (dish == kNew) {
    dish = next_dish_++;
  } else if (!dish_tables_.count(dish)) {
    throw NumericError("Franchise: attach to unknown dish");
  }
  ++dish_tables_[dish];
  ++total_tables_;
  it->second.dish = dish;
  return dish;
}

int Franchise::table_customers(int table) const {
  return static_cast<int>(tables_.at(table).members.size());
}

int Franchise::table_restaurant(int table) const { return tables_.at(table).restaurant; }

int Franchise::table_dish(int table) const { return tables_.at(table).dish; }

const std::vector<std::int64_t>& Franchise::table_members(int table) const {
  return tables_.at(table).members;
}

int Franchise::dish_table_count(int dish) const {
  auto it = dish_tables_.find(dish);
  return it == dish_tables_.end() ? 0 : it->second;
}

int Franchise::restaurant_customers(int restaurant) const {
  auto it = restaurant_customers_.find(restaurant);
  return it == restaurant_customers_.end() ? 0 : it->second;
}

int Franchise::customer_table(std::int64_t customer) const {
  auto it = customer_table_.find(customer);
  return it == customer_table_.end() ? kNew : it->second;
}

const std::vector<int>& Franchise::tables_of(int restaurant) const {
  static const std::vector<int> empty;
  auto it = restaurant_tables_.find(restaurant);
  return it == restaurant_tables_.end() ? empty : it->second;
}

std::vector<int> Franchise::dish_ids() const {
  std::vector<int> ids;
  ids.reserve(dish_tables_.size());
  for (const auto& [dish, m] : dish_tables_) ids.push_back(dish);
  return ids;
}

std::vector<int> Franchise::restaurant_ids() const {
  std::vector<int> ids;
  ids.reserve(restaurant_tables_.size());
  for (const auto& [r, tabs] : restaurant_tables_) ids.push_back(r);
  return ids;
}

void Franchise::audit() const {
  std::map<int, int> rest_counts;
  std::map<int, int> dish_counts;
  int n_tables = 0;
  for (const auto& [id, t] : tables_) {
    if (t.members.empty()) throw NumericError("audit: empty table kept");
    if (t.dish == kNew) throw NumericError("audit: detached table");
    rest_counts[t.restaurant] += static_cast<int>(t.members.size());
    ++dish_counts[t.dish];
    ++n_tables;
    for (std::int64_t c : t.members) {
      auto it = customer_table_.find(c);
      if (it == customer_table_.end() || it->second != id) {
        throw NumericError("audit: member without matching seat");
      }
    }
    const auto& list = tables_of(t.restaurant);
    if (std::find(list.begin(), list.end(), id) == list.end()) {
      throw NumericError("audit: table missing from restaurant list");
    }
  }
  if (rest_counts != restaurant_customers_) throw NumericError("audit: restaurant counts drift");
  if (dish_counts != dish_tables_) throw NumericError("audit: dish table counts drift");
  if (n_tables != total_tables_) throw NumericError("audit: total table count drift");
  std::size_t listed = 0;
  for (const auto& [r, tabs] : restaurant_tables_) listed += tabs.size();
  if (listed != tables_.size()) throw NumericError("audit: restaurant lists drift");
}

Franchise::State Franchise::state() const {
  State s{alpha_, top_, next_table_, next_dish_, {}};
  for (const auto& [r, tabs] : restaurant_tables_) {
    for (int id : tabs) {
      const Table& t = tables_.at(id);
      s.tables.push_back(TableState{id, t.restaurant, t.dish, t.members});
    }
  }
  return s;
}

Franchise Franchise::from_state(const State& s) {
  Franchise f(s.alpha, s.top);
  for (const auto& ts : s.tables) {
    if (ts.members.empty()) throw DataError("Franchise state: empty table");
    if (f.tables_.count(ts.id)) throw DataError("Franchise state: duplicate table id");
    f.tables_.emplace(ts.id, Table{ts.restaurant, ts.dish, ts.members});
    f.restaurant_tables_[ts.restaurant].push_back(ts.id);
    ++f.dish_tables_[ts.dish];
    ++f.total_tables_;
    f.restaurant_customers_[ts.restaurant] += static_cast<int>(ts.members.size());
    for (std::int64_t c : ts.members) {
      if (f.customer_table_.count(c)) throw DataError("Franchise state: duplicate customer");
      f.customer_table_[c] = ts.id;
    }
  }
  f.next_table_ = s.next_table;
  f.next_dish_ = s.next_dish;
  f.audit();
  return f;
}

}  // namespace nptot
