"""Tests for multiscale-relational-transformer"""
