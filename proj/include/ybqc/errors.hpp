#pragma once

#include <stdexcept>
#include <string>

namespace ybqc {

/// Invalid or inconsistent configuration (bad parameter, malformed scenario key).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Base class for failures raised by the physics modules.
class PhysicsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

class IndexError : public DomainError {
public:
    using DomainError::DomainError;
};

class AddressingError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

class PlanningError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

class IntegratorError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

/// Protocol steps issued in the wrong order, or on atoms in the wrong manifold.
class ProtocolError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

class GeometryError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

} // namespace ybqc
