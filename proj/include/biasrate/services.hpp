#pragma once

// The black box under test and the ways of wiring one together.

#include <algorithm>
#include <atomic>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "biasrate/errors.hpp"

namespace biasrate {

/// A text translator between natural languages. Implementations must be safe
/// to call from several threads unless concurrent_safe() returns false.
class TranslationService {
 public:
  virtual ~TranslationService() = default;

  virtual const std::string& id() const = 0;

  /// Language codes this translator handles; empty means any.
  virtual std::vector<std::string> supported_languages() const = 0;

  virtual bool supports(const std::string& source, const std::string& target) const {
    auto langs = supported_languages();
    if (langs.empty()) return true;
    auto has = [&](const std::string& l) { return std::find(langs.begin(), langs.end(), l) != langs.end(); };
    return has(source) && has(target);
  }

  /// Failures surface as ExecutionError, never as empty output.
  virtual std::string translate(const std::string& text, const std::string& source,
                                const std::string& target) = 0;

  /// Called before each data block is processed.
  virtual void begin_block() {}

  /// False for translators whose output depends on call order.
  virtual bool concurrent_safe() const { return true; }
};

/// Anything that maps text to text; the unit a bias rating is assigned to.
class ServiceUnderTest {
 public:
  virtual ~ServiceUnderTest() = default;
  virtual const std::string& id() const = 0;
  virtual std::string transform(const std::string& text) = 0;
  virtual void begin_block() {}
  virtual bool concurrent_safe() const { return true; }
};

using TranslatorPtr = std::shared_ptr<TranslationService>;
using ServicePtr = std::shared_ptr<ServiceUnderTest>;

/// home -> middle -> home through the same translator.
class RoundTripService final : public ServiceUnderTest {
 public:
  RoundTripService(TranslatorPtr translator, std::string middle, std::string home)
      : translator_(std::move(translator)), middle_(std::move(middle)), home_(std::move(home)) {
    if (!translator_) throw ConfigError("round trip needs a translator");
    if (!translator_->supports(home_, middle_) || !translator_->supports(middle_, home_))
      throw ConfigError("translator '" + translator_->id() + "' does not support " + home_ +
                        " <-> " + middle_);
    id_ = translator_->id() + ":" + home_ + "-" + middle_ + "-" + home_;
  }

  const std::string& id() const override { return id_; }
  const std::string& middle_language() const noexcept { return middle_; }
  const std::string& home_language() const noexcept { return home_; }

  std::string transform(const std::string& text) override {
    return translator_->translate(translator_->translate(text, home_, middle_), middle_, home_);
  }

  void begin_block() override { translator_->begin_block(); }
  bool concurrent_safe() const override { return translator_->concurrent_safe(); }

 private:
  TranslatorPtr translator_;
  std::string middle_;
  std::string home_;
  std::string id_;
};

inline ServicePtr round_trip(TranslatorPtr translator, const std::string& middle,
                             const std::string& home = "en") {
  return std::make_shared<RoundTripService>(std::move(translator), middle, home);
}

/// Feeds the output of `first` into `second`. Execution errors are rethrown
/// with the failing stage named.
class SequentialService final : public ServiceUnderTest {
 public:
  SequentialService(ServicePtr first, ServicePtr second)
      : first_(std::move(first)), second_(std::move(second)) {
    if (!first_ || !second_) throw ConfigError("sequential composition needs two services");
    id_ = "(" + first_->id() + ")*(" + second_->id() + ")";
  }

  const std::string& id() const override { return id_; }

  std::string transform(const std::string& text) override {
    std::string intermediate;
    try {
      intermediate = first_->transform(text);
    } catch (const NetworkExhaustedError& e) {
      throw NetworkExhaustedError("stage 1 (" + first_->id() + "): " + e.what());
    } catch (const ExecutionError& e) {
      throw ExecutionError("stage 1 (" + first_->id() + "): " + e.what());
    }
    try {
      return second_->transform(intermediate);
    } catch (const NetworkExhaustedError& e) {
      throw NetworkExhaustedError("stage 2 (" + second_->id() + "): " + e.what());
    } catch (const ExecutionError& e) {
      throw ExecutionError("stage 2 (" + second_->id() + "): " + e.what());
    }
  }

  void begin_block() override {
    first_->begin_block();
    second_->begin_block();
  }

  bool concurrent_safe() const override {
    return first_->concurrent_safe() && second_->concurrent_safe();
  }

 private:
  ServicePtr first_;
  ServicePtr second_;
  std::string id_;
};

inline ServicePtr sequential_compose(ServicePtr first, ServicePtr second) {
  return std::make_shared<SequentialService>(std::move(first), std::move(second));
}

/// Counts calls and forwards to the wrapped translator. Used for dry runs and
/// to check that a warm cache keeps traffic at zero.
class CountingTranslator final : public TranslationService {
 public:
  explicit CountingTranslator(TranslatorPtr inner) : inner_(std::move(inner)) {}

  const std::string& id() const override { return inner_->id(); }
  std::vector<std::string> supported_languages() const override {
    return inner_->supported_languages();
  }
  bool supports(const std::string& s, const std::string& t) const override {
    return inner_->supports(s, t);
  }
  std::string translate(const std::string& text, const std::string& source,
                        const std::string& target) override {
    calls_.fetch_add(1);
    return inner_->translate(text, source, target);
  }
  void begin_block() override { inner_->begin_block(); }
  bool concurrent_safe() const override { return inner_->concurrent_safe(); }

  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  TranslatorPtr inner_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace biasrate
