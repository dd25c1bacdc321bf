"""Energy-aware scheduling of periodic task graphs on multiprocessors."""
