"""
表格输出测试
"""

import numpy as np
import pandas as pd
import pytest

from src.core.io import load_json, render_markdown, save_table


class TestRenderMarkdown:
    """markdown 表格渲染"""

    def test_fixed_three_digits_and_nan(self):
        frame = pd.DataFrame(
            {'estimator': ['theta', 'ols'], 'estimate': [1.23456, np.nan], 'replications': [3, 3]}
        )
        assert render_markdown(frame) == (
            '| estimator | estimate | replications |\n'
            '|---|---|---|\n'
            '| theta | 1.235 | 3 |\n'
            '| ols | nan | 3 |\n'
        )

    def test_infinite_written_as_nan(self):
        frame = pd.DataFrame({'se': [np.inf]})
        assert render_markdown(frame).splitlines()[-1] == '| nan |'


class TestSaveTable:
    """三种格式的保存"""

    def test_md_has_metadata_header(self, tmp_path):
        path = tmp_path / 'out.md'
        save_table([{'a': 0.5}], str(path), 'md', metadata={'seed': 7})
        text = path.read_text(encoding='utf-8')
        assert text.startswith('# seed: 7\n\n')
        assert text.endswith('| a |\n|---|\n| 0.500 |\n')

    def test_json_keeps_metadata(self, tmp_path):
        path = tmp_path / 'out.json'
        save_table([{'a': 1}], str(path), 'json', metadata={'seed': 7})
        assert load_json(str(path)) == {'seed': 7, 'table': [{'a': 1}]}

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            save_table([], str(tmp_path / 'out.txt'), 'txt')
