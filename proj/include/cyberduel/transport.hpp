#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "cyberduel/protocol.hpp"
#include "cyberduel/topic.hpp"

namespace cyberduel {

using MessageHandler = std::function<void(const std::string& topic, const std::string& payload)>;
using SubscriptionId = std::uint64_t;

// Pub/sub contract shared by the in-process bus and the framed TCP link.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void publish(const std::string& topic, std::string payload) = 0;
  virtual SubscriptionId subscribe(const std::string& filter, MessageHandler handler) = 0;
  virtual void unsubscribe(SubscriptionId id) = 0;
};

void publish(Transport& transport, const Topic& topic, const protocol::Message& message);

// In-process broker. Every published message goes through one FIFO queue, so
// ordering is global (and therefore per topic). Delivery happens on whichever
// thread is draining the queue; a publish issued from inside a handler is
// queued and delivered after the current handler returns.
class InProcessBus final : public Transport {
 public:
  void publish(const std::string& topic, std::string payload) override;
  SubscriptionId subscribe(const std::string& filter, MessageHandler handler) override;
  void unsubscribe(SubscriptionId id) override;

  // Queue without delivering; pair with flush().
  void enqueue(const std::string& topic, std::string payload);
  void flush();

  std::size_t pending() const;
  std::uint64_t delivered() const;
  std::uint64_t handler_errors() const;

 private:
  struct Subscription {
    std::string filter;
    std::shared_ptr<MessageHandler> handler;
  };

  mutable std::mutex mu_;
  std::deque<std::pair<std::string, std::string>> queue_;
  std::map<SubscriptionId, Subscription> subs_;
  SubscriptionId next_id_ = 1;
  bool draining_ = false;
  std::uint64_t delivered_ = 0;
  std::uint64_t handler_errors_ = 0;
};

}  // namespace cyberduel
