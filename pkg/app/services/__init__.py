# Ring arithmetic, codes, lattices, gains, search and channel simulation
