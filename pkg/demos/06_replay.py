"""Mid-run retuning and exact replay.

The live service lets a player pause a generation, move the knobs, and
resume; every accepted change is logged against the step it landed on.
This demo drives the same engine directly: a run is replayed from its
initial config plus knob log, and reproduces the exact frame stream the
live session would broadcast, score included. That log is the whole
save file.

A live server is one command away: python3 -m sirswarm.cli serve

Run: python3 demos/06_replay.py
"""

from __future__ import annotations

from sirswarm import SimConfig
from sirswarm.service import KnobEvent, ReplayRecord, replay_frames


def main() -> None:
    config = SimConfig(n_agents=40, arena_width=5.0, arena_height=5.0,
                       v_max=0.088, t_recover=30, t_max=120, seed=9)
    # The player watched the outbreak grow, then hit pause at step 40
    # and slammed transmission to zero while spreading agents out.
    events = (KnobEvent(step=40, values={"p_infection": 0.0, "d_social": 0.4}),)
    record = ReplayRecord(initial_config=config, events=events)

    messages = replay_frames(record)
    frames = [m for m in messages if m["type"] == "frame"]
    score = messages[-1]

    last = frames[-1]["step"]
    extinct = next(f["step"] for f in frames if f["counts"]["i"] == 0)
    print(f"replayed {len(frames)} frames from a {len(record.events)}-event knob log")
    print(f"last infection gone by step {extinct}; the stream still pads to"
          f" step {last} so the score covers the whole horizon")
    for step in sorted({0, 20, 40, 41, 60, extinct, last} & set(range(len(frames)))):
        counts = frames[step]["counts"]
        print(f"  step {step:>3}: s={counts['s']:>2} i={counts['i']:>2}"
              f" r={counts['r']:>2} v={counts['v']:>2}")
    print(f"final score {score['breakdown']['s']:.2f}"
          f" (health {score['breakdown']['s_h']:.3f},"
          f" freedom {score['breakdown']['s_f']:.3f})")

    again = replay_frames(record)
    print(f"replay of the replay identical: {again == messages}")


if __name__ == "__main__":
    main()
