#pragma once

#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "aerje/corpus.hpp"

namespace aerje {

// Inventory of fully qualified API names. The segment index holds every
// dot-separated suffix chain of every entry (lowercased), both with and
// without a trailing "()", so "remove()", "remove", "iterator.remove()" and
// "iterator.remove" all point back at java.util.Iterator.remove().
struct APIInventory {
  std::set<std::string> entries;
  std::unordered_set<std::string> segment_index;

  bool has_chain(const std::string& lowercase_chain) const {
    return segment_index.count(lowercase_chain) > 0;
  }
};

// One name per line; '#' starts a comment line; duplicates collapse.
// An empty inventory is a misconfiguration and an error.
APIInventory load_inventory(const std::string& path);
APIInventory make_inventory(const std::vector<std::string>& names);

// The three filter criteria. is_candidate iff any reason holds.
struct CandidateVerdict {
  Token token;
  bool is_candidate = false;
  bool partial_match = false;  // suffix-segment chain of an inventory entry
  bool has_parens = false;     // surface contains "()"
  bool has_dot = false;        // dotted call; numbers and ellipses excluded
};

CandidateVerdict judge_token(const Token& token, const APIInventory& inv);

// Keeps exactly the sentences with at least one candidate token, in input
// order, and marks candidate tokens api-like on the kept sentences.
std::vector<Sentence> filter_sentences(std::vector<Sentence> sentences, const APIInventory& inv);

}  // namespace aerje
