#include "cyberduel/transport.hpp"

#include <iostream>
#include <vector>

namespace cyberduel {

void publish(Transport& transport, const Topic& topic, const protocol::Message& message) {
  transport.publish(topic.path, protocol::encode_payload(message));
}

void InProcessBus::publish(const std::string& topic, std::string payload) {
  enqueue(topic, std::move(payload));
  flush();
}

void InProcessBus::enqueue(const std::string& topic, std::string payload) {
  std::lock_guard lk(mu_);
  queue_.emplace_back(topic, std::move(payload));
}

SubscriptionId InProcessBus::subscribe(const std::string& filter, MessageHandler handler) {
  std::lock_guard lk(mu_);
  const auto id = next_id_++;
  subs_.emplace(id, Subscription{filter, std::make_shared<MessageHandler>(std::move(handler))});
  return id;
}

void InProcessBus::unsubscribe(SubscriptionId id) {
  std::lock_guard lk(mu_);
  subs_.erase(id);
}

void InProcessBus::flush() {
  std::unique_lock lk(mu_);
  if (draining_) return;
  draining_ = true;
  while (!queue_.empty()) {
    auto [topic, payload] = std::move(queue_.front());
    queue_.pop_front();
    std::vector<std::shared_ptr<MessageHandler>> targets;
    for (const auto& [id, sub] : subs_)
      if (topic_matches(sub.filter, topic)) targets.push_back(sub.handler);
    lk.unlock();
    for (const auto& h : targets) {
      try {
        (*h)(topic, payload);
      } catch (const std::exception& e) {
        std::lock_guard guard(mu_);
        ++handler_errors_;
        std::cerr << "bus: handler for " << topic << " failed: " << e.what() << '\n';
      }
    }
    lk.lock();
    delivered_ += targets.size();
  }
  draining_ = false;
}

std::size_t InProcessBus::pending() const {
  std::lock_guard lk(mu_);
  return queue_.size();
}

std::uint64_t InProcessBus::delivered() const {
  std::lock_guard lk(mu_);
  return delivered_;
}

std::uint64_t InProcessBus::handler_errors() const {
  std::lock_guard lk(mu_);
  return handler_errors_;
}

}  // namespace cyberduel
