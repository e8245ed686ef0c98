"""Regenerates the synthetic series under fixtures/."""
import math
import pathlib

import numpy as np

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
DAY = 86400
START = 1483228800  # 2017-01-01


def write(name, prices, sentiment):
    with open(FIXTURES / name, "w", newline="\n") as f:
        f.write("time,price,sentiment\n")
        for i, (p, s) in enumerate(zip(prices, sentiment)):
            f.write(f"{START + DAY * i},{p!r},{s!r}\n")


def sine(n=300, period=30.0):
    prices = [round(5000.0 + 1000.0 * math.sin(2.0 * math.pi * i / period), 6) for i in range(n)]
    write("sine.csv", prices, [0.0] * n)


def sentiment_signal(n=400, sigma=25.0, noise=0.2, seed=2018):
    # Sentiment on day t leans toward the sign of the move from t to t+1.
    rng = np.random.default_rng(seed)
    steps = rng.normal(0.0, sigma, n)
    prices = 5000.0 + np.concatenate([[0.0], np.cumsum(steps[:-1])])
    sentiment = np.clip(0.5 * np.sign(steps) + rng.normal(0.0, noise, n), -1.0, 1.0)
    write("sentiment_signal.csv", [round(float(p), 6) for p in prices],
          [round(float(s), 6) for s in sentiment])


if __name__ == "__main__":
    sine()
    sentiment_signal()
