#!/usr/bin/env python3
"""Regenerate the bundled scenario library under src/vonav/data/scenarios/v1.

Run from the repo root after an editable install:

    python3 tools/make_scenarios.py
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from vonav.scenarios import (
    add_border_walls,
    empty_grid,
    fill_rect,
    generate_constrained_world,
    validate_scenario,
)
from vonav.world import save_map

OUT = Path(__file__).resolve().parents[1] / "src" / "vonav" / "data" / "scenarios" / "v1"


def write_scenario(name: str, doc: dict) -> None:
    path = OUT / f"{name}.yaml"
    path.write_text(yaml.safe_dump(doc, sort_keys=True))
    problems = validate_scenario(path)
    if problems:
        raise SystemExit(f"{name}: {problems}")
    print(f"wrote {path.name}")


def rounded(values, nd=3):
    return [round(float(v), nd) for v in values]


def ped_entry(pid, start, waypoints, speed, radius=0.3):
    return {
        "id": pid,
        "start": rounded(start),
        "radius": radius,
        "desired_speed": round(float(speed), 2),
        "waypoints": [rounded(w) for w in waypoints],
    }


# --- corridor ----------------------------------------------------------------

def corridor_map():
    grid = empty_grid(12.0, 4.0, 0.05)
    add_border_walls(grid, 0.2)
    save_map(grid, OUT / "corridor.map.yaml")


CORRIDOR_PEDS_5 = [
    ped_entry(1, (9.0, 2.5), [(1.5, 2.5), (9.0, 2.5)], 1.0),
    ped_entry(2, (7.0, 1.4), [(1.5, 1.4), (7.0, 1.4)], 0.9),
    ped_entry(3, (5.0, 3.1), [(5.0, 0.9), (5.0, 3.1)], 1.1),
    ped_entry(4, (7.5, 0.9), [(7.5, 3.1), (7.5, 0.9)], 1.0),
    ped_entry(5, (3.5, 3.0), [(6.5, 1.0), (3.5, 3.0)], 0.8),
]

CORRIDOR_PEDS_15 = CORRIDOR_PEDS_5 + [
    ped_entry(6, (10.5, 2.0), [(2.0, 2.0), (10.5, 2.0)], 1.05),
    ped_entry(7, (8.5, 3.0), [(2.0, 3.0), (8.5, 3.0)], 0.95),
    ped_entry(8, (6.0, 0.9), [(2.5, 0.9), (6.0, 0.9)], 1.1),
    ped_entry(9, (4.0, 0.9), [(4.0, 3.1), (4.0, 0.9)], 1.0),
    ped_entry(10, (6.5, 3.1), [(6.5, 0.9), (6.5, 3.1)], 0.9),
    ped_entry(11, (9.0, 0.9), [(9.0, 3.1), (9.0, 0.9)], 1.15),
    ped_entry(12, (2.5, 3.1), [(10.0, 3.1), (2.5, 3.1)], 0.85),
    ped_entry(13, (10.0, 1.2), [(3.0, 2.8), (10.0, 1.2)], 1.0),
    ped_entry(14, (3.0, 1.2), [(9.5, 2.6), (3.0, 1.2)], 0.9),
    ped_entry(15, (8.0, 2.2), [(2.2, 1.8), (8.0, 2.2)], 1.05),
]


def corridor_scenarios():
    corridor_map()
    base = {
        "profile": "turtlebot",
        "map": "corridor.map.yaml",
        "robot": {"start": [1.0, 2.0, 0.0], "radius": 0.3},
        "goals": [[9.5, 2.0]],
        "dt": 0.05,
        "trials": 4,
        "seed": 1000,
    }
    write_scenario(
        "corridor_05", {**base, "name": "corridor_05", "pedestrians": CORRIDOR_PEDS_5}
    )
    write_scenario(
        "corridor_15", {**base, "name": "corridor_15", "pedestrians": CORRIDOR_PEDS_15}
    )
    write_scenario(
        "corridor_empty", {**base, "name": "corridor_empty", "pedestrians": []}
    )


# --- lobby ---------------------------------------------------------------

def lobby_map():
    grid = empty_grid(25.0, 10.0, 0.05)
    add_border_walls(grid, 0.2)
    for px in (6.0, 12.0, 18.0):
        for py in (3.3, 6.7):
            fill_rect(grid, px - 0.2, py - 0.2, px + 0.2, py + 0.2)
    fill_rect(grid, 2.5, 4.2, 5.0, 5.2)    # service desk
    fill_rect(grid, 20.5, 2.0, 21.5, 3.0)  # bench
    fill_rect(grid, 15.0, 8.0, 16.2, 8.8)  # bin cluster
    fill_rect(grid, 9.0, 1.2, 10.0, 2.0)   # seating block
    save_map(grid, OUT / "lobby.map.yaml")
    return grid


LOBBY_ANCHORS = [
    (1.5, 8.5), (5.5, 8.5), (12.5, 8.8), (19.0, 8.5), (23.5, 8.5),
    (23.5, 5.0), (23.0, 1.5), (17.5, 1.3), (13.0, 1.5), (6.5, 1.3),
    (1.5, 1.5), (1.3, 5.5), (8.5, 5.0), (15.0, 5.0), (21.0, 6.5),
    (9.5, 8.0), (4.0, 2.5), (19.5, 3.5), (11.0, 3.5), (7.0, 7.0),
]


def lobby_scenarios():
    grid = lobby_map()
    inflated = grid.inflated(0.35)
    rng = np.random.default_rng(20240)

    def free(p):
        row, col = grid.world_to_cell(p[0], p[1])
        return 0 <= row < grid.height and 0 <= col < grid.width and not inflated[row, col]

    assert all(free(a) for a in LOBBY_ANCHORS)
    base = {
        "profile": "turtlebot",
        "map": "lobby.map.yaml",
        "robot": {"start": [1.5, 1.5, 0.0], "radius": 0.3},
        "goals": [[22.5, 5.0], [12.5, 8.8], [2.0, 8.0], [12.5, 2.5]],
        "dt": 0.05,
        "trials": 4,
        "seed": 2000,
    }
    for count in (5, 15, 25, 35, 45, 55):
        peds = []
        for pid in range(1, count + 1):
            i, j, k = rng.choice(len(LOBBY_ANCHORS), size=3, replace=False)
            start = np.asarray(LOBBY_ANCHORS[i]) + rng.uniform(-0.3, 0.3, 2)
            if not free(start):
                start = np.asarray(LOBBY_ANCHORS[i])
            peds.append(
                ped_entry(
                    pid,
                    start,
                    [LOBBY_ANCHORS[j], LOBBY_ANCHORS[k], LOBBY_ANCHORS[i]],
                    rng.uniform(0.8, 1.2),
                )
            )
        name = f"lobby_{count:02d}"
        write_scenario(name, {**base, "name": name, "pedestrians": peds})


# --- open square ---------------------------------------------------------

def square_scenarios():
    grid = empty_grid(20.0, 20.0, 0.05)
    add_border_walls(grid, 0.2)
    save_map(grid, OUT / "square.map.yaml")
    rng = np.random.default_rng(31337)
    base = {
        "profile": "turtlebot",
        "map": "square.map.yaml",
        "robot": {"start": [2.0, 10.0, 0.0], "radius": 0.3},
        "goals": [[17.5, 10.0], [10.0, 17.5], [2.5, 10.0], [10.0, 2.5]],
        "dt": 0.05,
        "trials": 4,
        "seed": 3000,
    }
    for count in (25, 35):
        peds = []
        for pid in range(1, count + 1):
            start = rng.uniform(2.0, 18.0, 2)
            waypoints = [rng.uniform(1.5, 18.5, 2) for _ in range(2)]
            peds.append(ped_entry(pid, start, waypoints, rng.uniform(0.8, 1.2)))
        name = f"square_{count:02d}"
        write_scenario(name, {**base, "name": name, "pedestrians": peds})


# --- constrained static maze ----------------------------------------------

def barn_scenarios():
    grid, start, goal = generate_constrained_world(seed=7, difficulty=0.5)
    save_map(grid, OUT / "barn_maze.map.yaml")
    write_scenario(
        "barn_maze",
        {
            "name": "barn_maze",
            "profile": "jackal",
            "map": "barn_maze.map.yaml",
            "robot": {"start": [float(start[0]), float(start[1]), 0.0], "radius": 0.3},
            "goals": [[float(goal[0]), float(goal[1])]],
            "pedestrians": [],
            "dt": 0.05,
            "trials": 4,
            "seed": 4000,
        },
    )


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    corridor_scenarios()
    lobby_scenarios()
    square_scenarios()
    barn_scenarios()
    print("done")
