"""Fair division of divisible commodities by bargaining and bankruptcy rules."""
