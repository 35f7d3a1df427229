"""Tests for lubin-tate-action"""
