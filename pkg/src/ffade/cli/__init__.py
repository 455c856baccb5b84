from .commands import read_score_file, score_lines

__all__ = ["read_score_file", "score_lines"]
