# PROMISE metric tables, feature joins and synthetic version pairs
