import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def _genre_flags(rng, n=19):
    flags = (rng.random(n) < 0.3).astype(int)
    if flags.sum() == 0:
        flags[int(rng.integers(n))] = 1
    return flags


@pytest.fixture
def movielens_dir(tmp_path):
    """A small synthetic directory in the MovieLens-100K on-disk format."""
    rng = np.random.default_rng(7)
    n_items, n_users = 40, 12
    item_lines = []
    for i in range(1, n_items + 1):
        year = int(rng.integers(1940, 1999))
        flags = "|".join(str(f) for f in _genre_flags(rng))
        item_lines.append(
            f"{i}|Movie {i} ({year})|01-Jan-{year}|"
            f"|http://example/{i}|{flags}"
        )
    # one item with an unparseable release date
    flags = "|".join(str(f) for f in _genre_flags(rng))
    item_lines.append(f"{n_items + 1}|Mystery Item||" f"|http://example/x|{flags}")
    (tmp_path / "u.item").write_text("\n".join(item_lines) + "\n", encoding="latin-1")

    data_lines = []
    for u in range(1, n_users + 1):
        items = rng.choice(np.arange(1, n_items + 2), size=14, replace=False)
        for item in items:
            rating = int(rng.integers(1, 6))
            data_lines.append(f"{u}\t{item}\t{rating}\t88125{u:04d}")
    (tmp_path / "u.data").write_text("\n".join(data_lines) + "\n")
    return tmp_path


@pytest.fixture
def lastfm_dir(tmp_path):
    rng = np.random.default_rng(11)
    n_artists, n_users, n_tags = 30, 6, 12
    ua = ["userID\tartistID\tweight"]
    for u in range(1, n_users + 1):
        artists = rng.choice(np.arange(1, n_artists + 1), size=8, replace=False)
        for a in artists:
            ua.append(f"{u}\t{a}\t{int(rng.integers(1, 500))}")
    (tmp_path / "user_artists.dat").write_text("\n".join(ua) + "\n")

    tags = ["userID\tartistID\ttagID\tday\tmonth\tyear"]
    for _ in range(200):
        u = int(rng.integers(1, n_users + 1))
        a = int(rng.integers(1, n_artists + 1))
        t = int(rng.integers(1, n_tags + 1))
        tags.append(f"{u}\t{a}\t{t}\t1\t1\t2010")
    (tmp_path / "user_taggedartists.dat").write_text("\n".join(tags) + "\n")
    return tmp_path


@pytest.fixture
def amazon_file(tmp_path):
    import json

    rng = np.random.default_rng(13)
    words = ["great", "pan", "broke", "sturdy", "cheap", "kitchen", "love",
             "returned", "perfect", "rusty"]
    lines = []
    for u in range(1, 7):
        for i in rng.choice(np.arange(1, 16), size=6, replace=False):
            rating = int(rng.integers(1, 6))
            text = " ".join(rng.choice(words, size=8))
            lines.append(json.dumps({
                "reviewerID": f"U{u}", "asin": f"B{i:04d}",
                "overall": rating, "reviewText": text,
            }))
    path = tmp_path / "reviews.json"
    path.write_text("\n".join(lines) + "\n")
    return path
