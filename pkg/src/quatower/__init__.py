"""quatower: exact quaternion algebras with involution over towers of
valued fields."""

__version__ = "0.1.0"
