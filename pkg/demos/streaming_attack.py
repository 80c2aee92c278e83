"""Run the pigeonhole attack on two small-space forgetless streaming programs."""

from obfx.streaming import attack_report, attack_source, cycle_add_program, fp_chord_program

for name, prog in [("fp_chord(64, 3)", fp_chord_program(64, 3)), ("cycle_add(64, 2)", cycle_add_program(64, 2))]:
    result = attack_source(prog, 2)
    rep = attack_report(prog, result)
    print(name)
    print("  state chain", list(result.state_chain), "free positions", list(result.free_positions[:2]))
    print("  output support", rep["support_size"], "distance", rep["distance"]["decimal"])
    print("  forced lower bound", rep["forced_distance_lower_bound"])
